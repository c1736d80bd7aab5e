/**
 * Root composition: the three panels over one ViewState. renderApp is a
 * pure function of the state, so tests can drive the store and assert on
 * the returned tree without a DOM.
 */

import { renderChatPanel } from "./chatPanel.js";
import { renderGraphPanel } from "./graphPanel.js";
import { renderMappingView } from "./mappingView.js";
import type { ViewState } from "./viewState.js";
import { h, VNode } from "./vdom.js";

export function renderApp(state: ViewState): VNode {
  return h("main", { class: "alignloop-app", key: "app" },
    renderChatPanel(state),
    renderGraphPanel(state),
    renderMappingView(state),
  );
}
