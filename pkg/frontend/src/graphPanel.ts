/**
 * Panel B: the full understanding graph as an editable node-link canvas.
 *
 * Nodes are draggable <g> elements keyed `task:<id>`; styling classes mark
 * selection, last-delta changes (`changed`), focus highlight, supernode
 * region echo, and queued buffer state (`pending-add` etc). The toolbar
 * queues node edits into the buffer; Commit sends the buffer as one
 * transaction, Discard drops it. The modify block sends free-form
 * instructions to the NL modification endpoint.
 */

import { layoutGraph } from "./layout.js";
import type { ViewState } from "./viewState.js";
import { edgeKey } from "./viewState.js";
import { h, VNode } from "./vdom.js";

const NODE_WIDTH = 160;
const NODE_HEIGHT = 54;

export function renderGraphPanel(state: ViewState): VNode {
  const graph = state.renderedGraph();
  if (!graph.nodes.length) {
    return h("section", { class: "panel graph-panel", key: "panel:graph" },
      h("h2", {}, "Understanding graph"),
      h("p", { class: "empty-state" },
        "No graph yet. Submit a prompt to see how it decomposes into tasks."),
      renderModifyBlock(state),
    );
  }

  const positions = layoutGraph(
    graph.nodes.map((node) => node.id),
    graph.edges,
  );
  for (const [id, point] of state.dragPositions) {
    if (positions.has(id)) positions.set(id, point);
  }
  const changed = state.changedNodeIds();
  const highlight = new Set(state.view?.highlight ?? []);
  const region = new Set(state.regionHighlight);

  const edgeNodes = graph.edges.map((edge) => {
    const from = positions.get(edge.src);
    const to = positions.get(edge.dst);
    if (!from || !to) return null;
    const pending = graph.pendingEdges.get(edgeKey(edge));
    const classes = ["task-edge", `kind-${edge.kind.toLowerCase()}`];
    if (pending) classes.push(`pending-${pending}`);
    return h("g", { class: classes.join(" "), key: `edge:${edgeKey(edge)}` },
      h("line", {
        x1: from.x + NODE_WIDTH / 2, y1: from.y + NODE_HEIGHT / 2,
        x2: to.x + NODE_WIDTH / 2, y2: to.y + NODE_HEIGHT / 2,
        "marker-end": "url(#arrow)",
      }),
      h("title", {}, `${edge.src} -> ${edge.dst} (${edge.kind})`),
    );
  }).filter((node): node is VNode => node !== null);

  const taskNodes = graph.nodes.map((node) => {
    const point = positions.get(node.id) ?? { x: 0, y: 0 };
    const classes = ["task-node", `origin-${node.origin.toLowerCase()}`];
    if (state.selection.includes(node.id)) classes.push("selected");
    if (changed.has(node.id)) classes.push("changed");
    if (highlight.has(node.id)) classes.push("highlight");
    if (region.has(node.id)) classes.push("region-highlight");
    const pending = graph.pendingNodes.get(node.id);
    if (pending) classes.push(`pending-${pending}`);
    return h("g", {
      class: classes.join(" "),
      key: `task:${node.id}`,
      transform: `translate(${point.x},${point.y})`,
      "data-node-id": node.id,
      onclick: () => state.toggleSelect(node.id),
      onpointerdrag: (x: number, y: number) => state.dragNode(node.id, x, y),
    },
      h("rect", { width: NODE_WIDTH, height: NODE_HEIGHT, rx: 8 }),
      h("text", { x: NODE_WIDTH / 2, y: NODE_HEIGHT / 2 }, node.label),
      node.detail ? h("title", {}, node.detail) : null,
    );
  });

  return h("section", { class: "panel graph-panel", key: "panel:graph" },
    h("h2", {}, "Understanding graph"),
    renderToolbar(state),
    h("svg", { class: "graph-canvas", viewBox: "0 0 1200 700" },
      h("defs", {},
        h("marker", {
          id: "arrow", viewBox: "0 0 10 10", refX: 28, refY: 5,
          markerWidth: 7, markerHeight: 7, orient: "auto-start-reverse",
        }, h("path", { d: "M 0 0 L 10 5 L 0 10 z" })),
      ),
      h("g", { class: "edges" }, edgeNodes),
      h("g", { class: "nodes" }, taskNodes),
    ),
    renderModifyBlock(state),
  );
}

function renderToolbar(state: ViewState): VNode {
  const pendingCount = state.pendingEdits.length;
  return h("div", { class: "edit-toolbar", key: "graph:toolbar" },
    h("input", { class: "new-node-label", placeholder: "new task label",
      key: "input:new-node" }),
    h("button", {
      class: "action-add-node", key: "btn:add-node", valueFrom: "input:new-node",
      onclick: (label: string) => state.queueAddNode(label),
    }, "Add node"),
    h("button", {
      class: "action-delete", key: "btn:delete",
      disabled: state.selection.length === 0 ? "disabled" : undefined,
      onclick: () => state.selection.forEach((id) => state.queueDeleteNode(id)),
    }, "Delete selection"),
    h("button", {
      class: "action-link", key: "btn:link",
      disabled: state.selection.length < 2 ? "disabled" : undefined,
      onclick: () => state.queueLinkSelection(),
    }, "Link selection"),
    h("button", {
      class: "action-relabel", key: "btn:relabel", valueFrom: "input:new-node",
      disabled: state.selection.length !== 1 ? "disabled" : undefined,
      onclick: (label: string) => state.queueEditLabel(state.selection[0], label),
    }, "Rename"),
    h("span", { class: "pending-count", key: "pending-count" },
      pendingCount ? `${pendingCount} queued` : ""),
    h("button", {
      class: "action-commit", key: "btn:commit",
      disabled: pendingCount === 0 ? "disabled" : undefined,
      onclick: () => void state.commitBuffer(),
    }, "Apply edits"),
    h("button", {
      class: "action-discard", key: "btn:discard",
      disabled: pendingCount === 0 ? "disabled" : undefined,
      onclick: () => state.discardBuffer(),
    }, "Discard"),
  );
}

function renderModifyBlock(state: ViewState): VNode {
  return h("div", { class: "modify-block", key: "graph:modify" },
    h("textarea", { class: "modify-text", key: "input:modify",
      placeholder: "describe a graph change in plain language" }),
    h("button", {
      class: "action-modify", key: "btn:modify", valueFrom: "input:modify",
      disabled: state.status !== "GRAPH_REVIEW" ? "disabled" : undefined,
      onclick: (instruction: string) => void state.modify(instruction),
    }, "Modify"),
  );
}
