"""Operator entry points.

  alignloop serve       run the session server (HTTP + push channel)
  alignloop playground  synthesize multi-round dialogue datasets
  alignloop eval        score candidate/reference pairs and write a report
  alignloop simplify    run graph simplification on a stored triple

Every command accepts --mock to bind the deterministic scripted gateway,
so the whole pipeline can run offline. Exit codes: 0 success, 1 usage,
2 validation, 3 gateway/runtime failure.
"""

from __future__ import annotations

import json
import sys
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import click

from .errors import (
    AlignLoopError,
    EmptyCorpus,
    ExtractionFailed,
    GatewayError,
    InvalidTripleOutput,
    MalformedDocument,
    UnparseableProposal,
)
from .gateway import Backends, load_backends, mock_backends
from .metrics import format_report, score_corpus
from .model import validate_triple
from .playground import run_many
from .server import SessionService, SessionStore, build_app
from .simplify import simplify, view_to_doc

EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3


def _default_mock_scripts() -> dict[str, list[Any]]:
    text = resources.files("alignloop").joinpath("mockdata/walkthrough.json").read_text("utf-8")
    return json.loads(text)


def _resolve_backends(mock: bool, config: Optional[str], script: Optional[str],
                      audit_log: Optional[Path] = None) -> Backends:
    if mock:
        if script:
            scripts = json.loads(Path(script).read_text(encoding="utf-8"))
        else:
            scripts = _default_mock_scripts()
        return mock_backends(scripts)
    if not config:
        raise click.UsageError("--config is required unless --mock is given")
    return load_backends(Path(config), audit_log=audit_log)


@click.group()
def cli() -> None:
    """Intent-aware task-graph alignment toolkit."""


@cli.command()
@click.option("--config", type=click.Path(), help="endpoint config file (JSON)")
@click.option("--listen", default="127.0.0.1:8731", show_default=True,
              help="address:port to bind")
@click.option("--data-dir", default="./sessions", show_default=True,
              help="session persistence directory")
@click.option("--mock", is_flag=True, help="serve against the deterministic mock gateway")
@click.option("--script", type=click.Path(exists=True),
              help="mock script file (with --mock)")
@click.option("--audit-log", type=click.Path(), default=None,
              help="line-delimited request/response log (live gateways only)")
def serve(config: Optional[str], listen: str, data_dir: str, mock: bool,
          script: Optional[str], audit_log: Optional[str]) -> None:
    """Run the interactive session server."""
    backends = _resolve_backends(mock, config, script,
                                 Path(audit_log) if audit_log else None)
    store = SessionStore(Path(data_dir))
    service = SessionService(backends, store)
    app = build_app(service)

    host, _, port = listen.partition(":")
    click.echo(f"alignloop session server listening on {host}:{port or 8731}"
               + (" [mock gateway]" if mock else ""))
    import uvicorn
    uvicorn.run(app, host=host, port=int(port or 8731), log_level="warning")


@cli.command()
@click.argument("seed_file", type=click.Path(exists=True))
@click.option("--sessions", "-n", type=int, required=True,
              help="number of sessions to run")
@click.option("--out", "out_dir", default="./playground-out", show_default=True)
@click.option("--max-rounds", default=8, show_default=True)
@click.option("--workers", default=4, show_default=True)
@click.option("--config", type=click.Path(), help="endpoint config file (JSON)")
@click.option("--mock", is_flag=True)
@click.option("--script", type=click.Path(exists=True),
              help="mock script file, reused per session (with --mock)")
def playground(seed_file: str, sessions: int, out_dir: str, max_rounds: int,
               workers: int, config: Optional[str], mock: bool,
               script: Optional[str]) -> None:
    """Generate distillation data from multi-agent sessions."""
    if sessions < 1:
        raise click.UsageError("--sessions must be >= 1")
    seeds = [line.strip() for line in Path(seed_file).read_text(encoding="utf-8").splitlines()
             if line.strip()]
    if not seeds:
        raise MalformedDocument(f"seed file {seed_file} has no descriptions")
    descriptions = [seeds[i % len(seeds)] for i in range(sessions)]

    if mock:
        scripts = (json.loads(Path(script).read_text(encoding="utf-8"))
                   if script else _default_mock_scripts())
        factory = lambda: mock_backends(scripts)
    else:
        if not config:
            raise click.UsageError("--config is required unless --mock is given")
        shared = load_backends(Path(config))
        factory = lambda: shared

    outcomes = run_many(descriptions, factory, max_rounds=max_rounds, workers=workers)

    out = Path(out_dir)
    (out / "transcripts").mkdir(parents=True, exist_ok=True)
    dataset_path = out / "dataset.jsonl"
    statuses = []
    with dataset_path.open("w", encoding="utf-8") as fh:
        for index, outcome in enumerate(outcomes):
            for line in outcome.lines:
                fh.write(line + "\n")
            if outcome.session is not None:
                doc = outcome.session.to_doc()
                if outcome.error:
                    doc["error"] = outcome.error
                transcript_path = out / "transcripts" / f"session_{index:03d}.json"
                transcript_path.write_text(
                    json.dumps(doc, indent=2, sort_keys=True), encoding="utf-8")
                statuses.append(outcome.session.status.value)
            else:
                statuses.append("FAILED")
    total_lines = sum(len(outcome.lines) for outcome in outcomes)
    click.echo(f"wrote {dataset_path} ({total_lines} lines); "
               f"statuses: {', '.join(statuses)}")
    failures = [outcome.error for outcome in outcomes if outcome.error]
    if failures:
        # partial transcripts are already on disk at this point
        raise GatewayError(f"{len(failures)} of {len(outcomes)} sessions failed: "
                           f"{failures[0]}")


@cli.command("eval")
@click.argument("pairs_file", type=click.Path(exists=True))
@click.option("--out", "out_file", type=click.Path(), default=None,
              help="report path (default: <pairs_file>.report.txt)")
@click.option("--label", default="corpus", show_default=True)
def eval_cmd(pairs_file: str, out_file: Optional[str], label: str) -> None:
    """Score candidate/reference pairs (JSONL) with ROUGE-1/2/L and BLEU."""
    pairs = []
    for line_no, line in enumerate(
            Path(pairs_file).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            doc = json.loads(line)
            pairs.append((doc["candidate"], doc["reference"]))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise MalformedDocument(
                f"{pairs_file}:{line_no}: expected "
                f'{{"candidate": ..., "reference": ...}}: {exc}') from exc
    if not pairs:
        raise EmptyCorpus(f"{pairs_file} contains no pairs")
    scores = score_corpus(pairs)
    report = format_report({label: scores})
    target = Path(out_file) if out_file else Path(pairs_file).with_suffix(".report.txt")
    target.write_text(report, encoding="utf-8")
    click.echo(report, nl=False)
    click.echo(f"report written to {target}")


@cli.command("simplify")
@click.argument("triple_file", type=click.Path(exists=True))
@click.option("--focus", "-f", multiple=True, help="intent id to focus (repeatable)")
@click.option("--out", "out_file", type=click.Path(), default=None,
              help="view path (default: stdout)")
def simplify_cmd(triple_file: str, focus: tuple[str, ...],
                 out_file: Optional[str]) -> None:
    """Simplify a stored triple against a focus set (debug harness)."""
    triple = validate_triple(Path(triple_file).read_text(encoding="utf-8"))
    view = simplify(triple, frozenset(focus))
    text = json.dumps(view_to_doc(view), indent=2, sort_keys=True)
    if out_file:
        Path(out_file).write_text(text + "\n", encoding="utf-8")
        click.echo(f"view written to {out_file}")
    else:
        click.echo(text)


def main(argv: Optional[list[str]] = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return EXIT_USAGE
    except click.Abort:
        return EXIT_USAGE
    except (GatewayError, ExtractionFailed, InvalidTripleOutput,
            UnparseableProposal) as exc:
        click.echo(f"runtime error: {exc}", err=True)
        return EXIT_RUNTIME
    except AlignLoopError as exc:
        click.echo(f"validation error: {exc}", err=True)
        return EXIT_VALIDATION
    except ValueError as exc:
        click.echo(f"validation error: {exc}", err=True)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
