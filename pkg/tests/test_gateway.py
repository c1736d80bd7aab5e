"""Mock determinism, retry policy, config loading, template rendering."""

from __future__ import annotations

import json

import httpx
import pytest

from alignloop.errors import (
    AuthFailure,
    GatewayError,
    GatewayTimeout,
    MalformedDocument,
    MalformedResponse,
    RateLimited,
)
from alignloop.gateway import (
    Backends,
    HttpChatGateway,
    MockChatGateway,
    ModelEndpoint,
    Role,
    approx_token_count,
    load_backends,
    mock_backends,
    render_prompt,
    strip_fences,
)

ENDPOINT = ModelEndpoint(base_url="mock://x", model_name="m",
                         role=Role.CONVERSATIONAL)


class TestMock:
    def test_scripted_response(self):
        gateway = MockChatGateway({"conversational": ["ok"]})
        exchange = gateway.complete(ENDPOINT, [{"role": "user", "content": "hi"}])
        assert exchange.response == "ok"
        assert exchange.usage.completion_tokens == 1
        assert exchange.usage.prompt_tokens == 1

    def test_determinism(self):
        script = {"conversational": [
            {"response": "one two three", "latency_ms": 7.0,
             "prompt_tokens": 11, "completion_tokens": 3}]}
        messages = [{"role": "user", "content": "same input"}]
        first = MockChatGateway(script).complete(ENDPOINT, messages)
        second = MockChatGateway(script).complete(ENDPOINT, messages)
        assert first == second
        assert first.latency_ms == 7.0
        assert first.usage.prompt_tokens == 11

    def test_fail_twice_then_succeed(self):
        gateway = MockChatGateway({"conversational": [
            {"error": "timeout"}, {"error": "rate_limited"}, "recovered"]})
        exchange = gateway.complete(ENDPOINT, [{"role": "user", "content": "x"}])
        assert exchange.response == "recovered"
        assert len(gateway.calls) == 3   # two retries after the first attempt

    def test_always_failing_raises_after_three_attempts(self):
        gateway = MockChatGateway({"conversational": [
            {"error": "rate_limited"}] * 5})
        with pytest.raises(RateLimited):
            gateway.complete(ENDPOINT, [{"role": "user", "content": "x"}])
        assert len(gateway.calls) == 3

    def test_auth_failure_not_retried(self):
        gateway = MockChatGateway({"conversational": [{"error": "auth"}, "nope"]})
        with pytest.raises(AuthFailure):
            gateway.complete(ENDPOINT, [{"role": "user", "content": "x"}])
        assert len(gateway.calls) == 1

    def test_exhausted_script(self):
        gateway = MockChatGateway({"conversational": []})
        with pytest.raises(GatewayError):
            gateway.complete(ENDPOINT, [{"role": "user", "content": "x"}])

    def test_backoff_schedule_is_exponential(self, monkeypatch):
        sleeps = []
        monkeypatch.setattr("alignloop.gateway.time.sleep", sleeps.append)
        gateway = MockChatGateway({"conversational": [
            {"error": "rate_limited"}, {"error": "rate_limited"}, "ok"]})
        gateway.backoff_base = 0.5
        gateway.complete(ENDPOINT, [{"role": "user", "content": "x"}])
        assert sleeps == [0.5, 1.0]


class TestHttpGateway:
    def _gateway_with(self, handler):
        transport = httpx.MockTransport(handler)
        gateway = HttpChatGateway(client=httpx.Client(transport=transport))
        gateway.backoff_base = 0.0
        return gateway

    def _endpoint(self, **kwargs):
        return ModelEndpoint(base_url="http://backend/v1", model_name="m",
                             role=Role.EXTRACTOR, **kwargs)

    def test_success_with_usage(self):
        def handler(request):
            body = json.loads(request.content)
            assert body["model"] == "m"
            return httpx.Response(200, json={
                "choices": [{"message": {"content": "hello"},
                             "finish_reason": "stop"}],
                "usage": {"prompt_tokens": 4, "completion_tokens": 2},
            })
        exchange = self._gateway_with(handler).complete(
            self._endpoint(), [{"role": "user", "content": "hi there"}])
        assert exchange.response == "hello"
        assert exchange.usage == exchange.usage.__class__(4, 2)
        assert not exchange.usage.approximate

    def test_usage_fallback_is_flagged(self):
        def handler(request):
            return httpx.Response(200, json={
                "choices": [{"message": {"content": "three word reply"}}]})
        exchange = self._gateway_with(handler).complete(
            self._endpoint(), [{"role": "user", "content": "one two"}])
        assert exchange.usage.approximate
        assert exchange.usage.completion_tokens == 3
        assert exchange.usage.prompt_tokens == 2

    def test_retry_on_server_error(self):
        attempts = []

        def handler(request):
            attempts.append(1)
            if len(attempts) < 3:
                return httpx.Response(503)
            return httpx.Response(200, json={
                "choices": [{"message": {"content": "ok"}}]})
        exchange = self._gateway_with(handler).complete(
            self._endpoint(), [{"role": "user", "content": "x"}])
        assert exchange.response == "ok"
        assert len(attempts) == 3

    def test_persistent_429_raises_rate_limited(self):
        gateway = self._gateway_with(lambda request: httpx.Response(429))
        with pytest.raises(RateLimited):
            gateway.complete(self._endpoint(), [{"role": "user", "content": "x"}])

    def test_timeout_surfaces(self):
        def handler(request):
            raise httpx.ConnectTimeout("too slow")
        gateway = self._gateway_with(handler)
        with pytest.raises(GatewayTimeout):
            gateway.complete(self._endpoint(), [{"role": "user", "content": "x"}])

    def test_auth_error(self):
        gateway = self._gateway_with(lambda request: httpx.Response(401))
        with pytest.raises(AuthFailure):
            gateway.complete(self._endpoint(), [{"role": "user", "content": "x"}])

    def test_truncated_response_rejected(self):
        def handler(request):
            return httpx.Response(200, json={
                "choices": [{"message": {"content": "partial"},
                             "finish_reason": "length"}]})
        gateway = self._gateway_with(handler)
        with pytest.raises(MalformedResponse):
            gateway.complete(self._endpoint(), [{"role": "user", "content": "x"}])

    def test_missing_choices_rejected(self):
        gateway = self._gateway_with(
            lambda request: httpx.Response(200, json={"oops": True}))
        with pytest.raises(MalformedResponse):
            gateway.complete(self._endpoint(), [{"role": "user", "content": "x"}])

    def test_missing_api_key_env(self):
        gateway = self._gateway_with(lambda request: httpx.Response(200))
        endpoint = self._endpoint(api_key_ref="ALIGNLOOP_NO_SUCH_KEY")
        with pytest.raises(AuthFailure, match="ALIGNLOOP_NO_SUCH_KEY"):
            gateway.complete(endpoint, [{"role": "user", "content": "x"}])

    def test_audit_log_lines(self, tmp_path):
        def handler(request):
            return httpx.Response(200, json={
                "choices": [{"message": {"content": "audited"}}]})
        log = tmp_path / "audit.jsonl"
        transport = httpx.MockTransport(handler)
        gateway = HttpChatGateway(audit_log=log,
                                  client=httpx.Client(transport=transport))
        gateway.complete(self._endpoint(), [{"role": "user", "content": "x"}])
        gateway.complete(self._endpoint(), [{"role": "user", "content": "y"}])
        lines = [json.loads(l) for l in log.read_text().splitlines()]
        assert len(lines) == 2
        assert lines[0]["response"] == "audited"
        assert lines[0]["role"] == "extractor"


class TestEndpointValidation:
    def test_bad_url(self):
        with pytest.raises(MalformedDocument):
            ModelEndpoint(base_url="ftp://nope", model_name="m",
                          role=Role.STUDENT)

    def test_bad_timeout(self):
        with pytest.raises(MalformedDocument):
            ModelEndpoint(base_url="http://x", model_name="m",
                          role=Role.STUDENT, timeout=0)


class TestConfig:
    def test_load_backends(self, tmp_path, monkeypatch):
        monkeypatch.setenv("TEST_KEY_VAR", "sk-123")
        config = tmp_path / "endpoints.json"
        config.write_text(json.dumps({"endpoints": {
            "conversational": {"base_url": "http://a/v1", "model_name": "big",
                               "api_key_ref": "TEST_KEY_VAR"},
            "student": {"base_url": "http://b/v1", "model_name": "small",
                        "timeout": 5},
        }}))
        backends = load_backends(config)
        assert backends.has_role(Role.CONVERSATIONAL)
        assert backends.has_role(Role.STUDENT)
        assert not backends.has_role(Role.EXTRACTOR)
        assert backends.endpoints[Role.STUDENT].timeout == 5.0

    def test_missing_env_var_named_in_error(self, tmp_path, monkeypatch):
        monkeypatch.delenv("ALIGNLOOP_MISSING_KEY", raising=False)
        config = tmp_path / "endpoints.json"
        config.write_text(json.dumps({"endpoints": {
            "extractor": {"base_url": "http://a/v1", "model_name": "m",
                          "api_key_ref": "ALIGNLOOP_MISSING_KEY"}}}))
        with pytest.raises(MalformedDocument, match="ALIGNLOOP_MISSING_KEY"):
            load_backends(config)

    def test_unknown_role_rejected(self, tmp_path):
        config = tmp_path / "endpoints.json"
        config.write_text(json.dumps({"endpoints": {
            "oracle": {"base_url": "http://a", "model_name": "m"}}}))
        with pytest.raises(MalformedDocument):
            load_backends(config)

    def test_empty_config_rejected(self, tmp_path):
        config = tmp_path / "endpoints.json"
        config.write_text(json.dumps({"endpoints": {}}))
        with pytest.raises(MalformedDocument):
            load_backends(config)


class TestHelpers:
    def test_backends_requires_configured_role(self):
        backends = Backends(gateway=MockChatGateway({}), endpoints={})
        with pytest.raises(GatewayError):
            backends.chat(Role.STUDENT, [{"role": "user", "content": "x"}])

    def test_mock_backends_routes_by_role(self):
        backends = mock_backends({"conversational": ["code"],
                                  "extractor": ["triple"]})
        assert backends.chat(Role.EXTRACTOR, [
            {"role": "user", "content": "x"}]).response == "triple"

    def test_approx_token_count(self):
        assert approx_token_count("one two  three\nfour") == 4
        assert approx_token_count("") == 0

    def test_strip_fences(self):
        assert strip_fences("```json\n{\"a\": 1}\n```") == '{"a": 1}'
        assert strip_fences("plain") == "plain"

    def test_render_prompt_substitutes(self):
        text = render_prompt("generate_candidate_code", prompt="do the thing")
        assert "do the thing" in text
        assert "$prompt" not in text

    def test_templates_exist_for_all_operations(self):
        for name, params in [
            ("propose_updates", {"prompt": "p", "intent_tree": "{}"}),
            ("extract_triple", {"prompt": "p", "code": "c",
                                "prev_triple": "{}", "next_round": "1"}),
            ("student_extract", {"prompt": "p", "prev_triple": "{}",
                                 "next_round": "1"}),
            ("modify_graph", {"instruction": "i", "triple": "{}", "round": "1"}),
            ("generate_code", {"history": "h", "triple": "{}"}),
            ("generate_candidate_code", {"prompt": "p"}),
            ("construct_tree", {"description": "d"}),
            ("tree_variants", {"tree": "{}", "index": "2"}),
            ("simulate_prompt", {"target": "t", "round": "1", "tree": "{}"}),
            ("analyze_execution", {"code": "c", "tree": "{}"}),
        ]:
            rendered = render_prompt(name, **params)
            assert rendered.strip()
