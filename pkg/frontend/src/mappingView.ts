/**
 * Panel C: the intent tree next to the simplified graph.
 *
 * Clicking an intent refocuses the simplification on it; clicking a
 * supernode expands it, echoing its member region into Panel B's
 * highlighting. Supernodes are keyed `view:super:<intent>` and ordinary
 * view nodes `view:<id>`; assertions in tests hang off those keys.
 */

import { layoutGraph } from "./layout.js";
import type { IntentNodeDoc } from "./types.js";
import { isSupernode } from "./types.js";
import type { ViewState } from "./viewState.js";
import { h, VNode } from "./vdom.js";

const NODE_WIDTH = 150;
const NODE_HEIGHT = 48;

export function renderMappingView(state: ViewState): VNode {
  return h("section", { class: "panel mapping-panel", key: "panel:mapping" },
    h("h2", {}, "Intent / task mapping"),
    renderIntentTree(state),
    renderSimplifiedGraph(state),
  );
}

function renderIntentTree(state: ViewState): VNode {
  const tree = state.triple?.intent_tree;
  if (!tree) {
    return h("p", { class: "empty-state" }, "No intents tracked yet.");
  }
  const byId = new Map(tree.nodes.map((node) => [node.id, node]));

  const renderNode = (node: IntentNodeDoc): VNode => {
    const classes = ["intent-node", `state-${node.state.toLowerCase()}`];
    if (state.focus.includes(node.id)) classes.push("focused");
    return h("li", { key: `intent:${node.id}` },
      h("span", {
        class: classes.join(" "),
        "data-intent-id": node.id,
        onclick: () => void state.focusIntent(node.id),
      },
        node.text,
        h("span", { class: "state-badge" },
          node.state === "COMPLETED" ? " [done]" : ""),
      ),
      node.children.length
        ? h("ul", {}, node.children.map((child) => renderNode(byId.get(child)!)))
        : null,
    );
  };

  return h("div", { class: "intent-tree", key: "mapping:tree" },
    h("ul", {}, renderNode(byId.get(tree.root)!)));
}

function renderSimplifiedGraph(state: ViewState): VNode {
  const view = state.view;
  if (!view || !view.nodes.length) {
    return h("p", { class: "empty-state" }, "Nothing to simplify yet.");
  }
  const positions = layoutGraph(view.nodes.map((node) => node.id), view.edges);
  const highlight = new Set(view.highlight);

  const edges = view.edges.map((edge) => {
    const from = positions.get(edge.src);
    const to = positions.get(edge.dst);
    if (!from || !to) return null;
    return h("line", {
      class: `view-edge kind-${edge.kind.toLowerCase()}`,
      key: `view-edge:${edge.src}->${edge.dst}`,
      x1: from.x + NODE_WIDTH / 2, y1: from.y + NODE_HEIGHT / 2,
      x2: to.x + NODE_WIDTH / 2, y2: to.y + NODE_HEIGHT / 2,
      "marker-end": "url(#arrow-view)",
    });
  }).filter((node): node is VNode => node !== null);

  const nodes = view.nodes.map((node) => {
    const point = positions.get(node.id) ?? { x: 0, y: 0 };
    const supernode = isSupernode(node);
    const classes = [supernode ? "supernode" : "view-node"];
    if (highlight.has(node.id)) classes.push("highlight");
    return h("g", {
      class: classes.join(" "),
      key: `view:${node.id}`,
      transform: `translate(${point.x},${point.y})`,
      "data-node-id": node.id,
      "data-member-ids": supernode ? node.member_ids!.join(",") : undefined,
      onclick: supernode
        ? () => state.expandSupernode(node.id)
        : () => state.toggleSelect(node.id),
    },
      h("rect", { width: NODE_WIDTH, height: NODE_HEIGHT,
        rx: supernode ? 20 : 6 }),
      h("text", { x: NODE_WIDTH / 2, y: NODE_HEIGHT / 2 },
        supernode ? `${node.label} (${node.member_count})` : node.label),
    );
  });

  return h("svg", { class: "simplified-canvas", key: "mapping:canvas",
    viewBox: "0 0 900 520" },
    h("defs", {},
      h("marker", {
        id: "arrow-view", viewBox: "0 0 10 10", refX: 26, refY: 5,
        markerWidth: 6, markerHeight: 6, orient: "auto-start-reverse",
      }, h("path", { d: "M 0 0 L 10 5 L 0 10 z" })),
    ),
    h("g", { class: "edges" }, edges),
    h("g", { class: "nodes" }, nodes),
  );
}
