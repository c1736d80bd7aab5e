"""Record the mock walkthrough for the web UI's offline demo.

Runs the two-round scripted session against the session service in mock
mode and captures every response the UI would receive, so the frontend
can replay the session with zero network. Run from the repo root:
python3 scripts/gen_ui_fixture.py
"""

from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from alignloop.gateway import mock_backends  # noqa: E402
from alignloop.server import SessionService, SessionStore, node_edit_from_doc  # noqa: E402

PROMPT_1 = "Help me write a Python script to crawl media articles"
PROMPT_2 = "Now also extract keywords from each article for sentiment analysis"
INSTRUCTION = ("Save the titles, body text, and images from the original "
               "webpage in their original order")
EDITS = [
    {"op": "DELETE_NODE", "id": "g2"},
    {"op": "ADD_NODE", "node": {
        "id": "g5", "label": "Extract the title at each level of the article"}},
    {"op": "ADD_EDGE", "edge": {"src": "g1", "dst": "g5", "kind": "DEPENDENCY"}},
    {"op": "ADD_EDGE", "edge": {"src": "g5", "dst": "g3", "kind": "DEPENDENCY"}},
]


def main() -> None:
    root = Path(__file__).resolve().parents[1]
    scripts = json.loads(
        (root / "src/alignloop/mockdata/walkthrough.json").read_text("utf-8"))

    with tempfile.TemporaryDirectory() as tmp:
        service = SessionService(mock_backends(scripts), SessionStore(Path(tmp)))
        session = service.create_session("demo")
        recording = {
            "createSession": [session.to_doc()],
            "getState": [],
            "submitPrompt": [],
            "applyEdits": [],
            "modifyNl": [],
            "confirm": [],
            "focusIntent": [],
            "script": {
                "prompts": [PROMPT_1, PROMPT_2],
                "edits": EDITS,
                "instruction": INSTRUCTION,
            },
        }
        recording["submitPrompt"].append(service.submit_prompt("demo", PROMPT_1))
        recording["applyEdits"].append(service.apply_node_edits(
            "demo", [node_edit_from_doc(d) for d in EDITS]))
        recording["modifyNl"].append(service.modify_graph_nl("demo", INSTRUCTION))
        recording["confirm"].append(service.confirm_graph("demo"))
        recording["submitPrompt"].append(service.submit_prompt("demo", PROMPT_2))
        recording["confirm"].append(service.confirm_graph("demo"))
        recording["getState"].append(service.get_state("demo"))

    out = root / "frontend/src/fixtures/walkthrough_session.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(recording, indent=2, sort_keys=True) + "\n",
                   encoding="utf-8")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
