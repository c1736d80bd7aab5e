"""Regenerate src/alignloop/mockdata/walkthrough.json.

The walkthrough script drives the two-round demo session used by --mock
serve mode, the end-to-end tests, and the web UI replay: crawler prompt ->
review -> node edits -> NL modify -> confirm -> follow-up prompt ->
confirm. Run from the repo root: python3 scripts/gen_mockdata.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from alignloop.model import validate_triple, triple_to_doc  # noqa: E402


def intent(nid, text, children=()):
    return {"id": nid, "text": text, "state": "NOT_COMPLETED",
            "children": list(children)}


def task(nid, label, detail=None, origin="EXTRACTED"):
    return {"id": nid, "label": label, "detail": detail, "origin": origin}


def edge(src, dst, kind="DEPENDENCY"):
    return {"src": src, "dst": dst, "kind": kind}


TREE_R1 = {
    "root": "iroot",
    "nodes": [
        intent("iroot", "Build a web crawler for media articles", ["iA", "iB", "iC"]),
        intent("iA", "Set up the crawler"),
        intent("iB", "Process the text in the article"),
        intent("iC", "Save cover image"),
    ],
    "version": 1,
}

T1 = {
    "intent_tree": TREE_R1,
    "graph": {
        "nodes": [
            task("g1", "Initialize the crawler configuration and create the request header"),
            task("g2", "Check the safety of the article content"),
            task("g3", "Extract the text of the article and save it to a file"),
            task("g4", "Download images"),
        ],
        "edges": [edge("g1", "g2"), edge("g2", "g3"), edge("g1", "g4")],
    },
    "mapping": {"entries": [
        {"intent_id": "iA", "task_node_ids": ["g1"]},
        {"intent_id": "iB", "task_node_ids": ["g2", "g3"]},
        {"intent_id": "iC", "task_node_ids": ["g4"]},
    ]},
    "round": 1,
}

# graph state after the four review edits: delete g2, add g5 (root-owned),
# link g1->g5 and g5->g3; the NL modify then adds g6/g7 on top of it.
T1_MODIFIED = {
    "intent_tree": TREE_R1,
    "graph": {
        "nodes": [
            task("g1", "Initialize the crawler configuration and create the request header"),
            task("g3", "Extract the text of the article and save it to a file"),
            task("g4", "Download images"),
            task("g5", "Extract the title at each level of the article",
                 origin="USER_ADDED"),
            task("g6", "Parse the original element order of the webpage",
                 origin="NL_MODIFIED"),
            task("g7", "Save text and images in their original order",
                 origin="NL_MODIFIED"),
        ],
        "edges": [
            edge("g1", "g4"), edge("g1", "g5"), edge("g5", "g3"),
            edge("g3", "g7"), edge("g6", "g7"), edge("g4", "g7", "DATA_FLOW"),
        ],
    },
    "mapping": {"entries": [
        {"intent_id": "iA", "task_node_ids": ["g1"]},
        {"intent_id": "iB", "task_node_ids": ["g3", "g6", "g7"]},
        {"intent_id": "iC", "task_node_ids": ["g4"]},
        {"intent_id": "iroot", "task_node_ids": ["g5"]},
    ]},
    "round": 1,
}

TREE_R2 = {
    "root": "iroot",
    "nodes": [
        intent("iroot", "Build a web crawler for media articles",
               ["iA", "iB", "iC", "iD"]),
        intent("iA", "Set up the crawler"),
        intent("iB", "Process the text in the article"),
        intent("iC", "Save cover image"),
        intent("iD", "Extract keywords for sentiment analysis"),
    ],
    "version": 2,
}

T2 = {
    "intent_tree": TREE_R2,
    "graph": {
        "nodes": T1_MODIFIED["graph"]["nodes"] + [
            task("g8", "Extract keywords from the article text"),
        ],
        "edges": T1_MODIFIED["graph"]["edges"] + [edge("g3", "g8", "DATA_FLOW")],
    },
    "mapping": {"entries": [
        {"intent_id": "iA", "task_node_ids": ["g1"]},
        {"intent_id": "iB", "task_node_ids": ["g3", "g6", "g7"]},
        {"intent_id": "iC", "task_node_ids": ["g4"]},
        {"intent_id": "iD", "task_node_ids": ["g8"]},
        {"intent_id": "iroot", "task_node_ids": ["g5"]},
    ]},
    "round": 2,
}

UPDATES_R2 = {
    "updates": [
        {"op": "ADD", "parent_id": "iroot", "node_id": "iD",
         "text": "Extract keywords for sentiment analysis"},
    ],
    "provenance": "LLM_PROPOSED",
}

CODE_R1 = """\
import requests
from bs4 import BeautifulSoup

def crawl(url):
    headers = {"User-Agent": "article-crawler/0.1"}
    page = requests.get(url, headers=headers)
    soup = BeautifulSoup(page.text, "html.parser")
    text = soup.get_text()
    with open("article.txt", "w") as fh:
        fh.write(text)
    for img in soup.find_all("img"):
        download(img["src"])
"""

FINAL_CODE_R1 = """\
import requests
from bs4 import BeautifulSoup

def crawl(url):
    headers = {"User-Agent": "article-crawler/0.1"}
    page = requests.get(url, headers=headers)
    soup = BeautifulSoup(page.text, "html.parser")
    ordered = parse_original_order(soup)
    titles = extract_titles_by_level(soup)
    save_ordered_txt(titles, ordered)
    save_images_in_order(soup)
"""

CODE_R2 = """\
def extract_keywords(text):
    from collections import Counter
    words = [w for w in text.lower().split() if len(w) > 4]
    return Counter(words).most_common(20)
"""

FINAL_CODE_R2 = """\
import requests
from bs4 import BeautifulSoup
from collections import Counter

def crawl(url):
    headers = {"User-Agent": "article-crawler/0.1"}
    page = requests.get(url, headers=headers)
    soup = BeautifulSoup(page.text, "html.parser")
    ordered = parse_original_order(soup)
    titles = extract_titles_by_level(soup)
    save_ordered_txt(titles, ordered)
    save_images_in_order(soup)
    keywords = Counter(w for w in soup.get_text().lower().split() if len(w) > 4)
    save_keywords(keywords.most_common(20))
"""


def main() -> None:
    for doc in (T1, T1_MODIFIED, T2):
        validate_triple(doc)   # fixture must be schema-valid

    scripts = {
        "conversational": [
            {"response": CODE_R1, "latency_ms": 40.0},
            {"response": FINAL_CODE_R1, "latency_ms": 60.0},
            {"response": CODE_R2, "latency_ms": 40.0},
            {"response": FINAL_CODE_R2, "latency_ms": 60.0},
        ],
        "extractor": [
            {"response": json.dumps(triple_to_doc(validate_triple(T1)),
                                    sort_keys=True), "latency_ms": 25.0},
            {"response": json.dumps(triple_to_doc(validate_triple(T1_MODIFIED)),
                                    sort_keys=True), "latency_ms": 25.0},
            {"response": json.dumps(UPDATES_R2, sort_keys=True), "latency_ms": 10.0},
            {"response": json.dumps(triple_to_doc(validate_triple(T2)),
                                    sort_keys=True), "latency_ms": 25.0},
        ],
    }
    out = Path(__file__).resolve().parents[1] / "src/alignloop/mockdata/walkthrough.json"
    out.write_text(json.dumps(scripts, indent=2, sort_keys=True) + "\n",
                   encoding="utf-8")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
