"""alignloop: externalize a model's task-level understanding as an editable
graph, track user intent as a tree, simplify the graph against intent
changes, and condition code generation on the confirmed graph."""

__version__ = "0.1.0"
