/**
 * Panel A: the conversation. Prompts go in here; the latest generated
 * code renders below the transcript. Confirm hands the reviewed graph to
 * generation without needing a new prompt.
 */

import type { ViewState } from "./viewState.js";
import { h, VNode } from "./vdom.js";

export function renderChatPanel(state: ViewState): VNode {
  const canPrompt = state.status === "AWAITING_PROMPT" || state.status === "GENERATED";
  const canConfirm = state.status === "GRAPH_REVIEW" || state.status === "GENERATED";

  const entries = state.transcript.map((entry, index) =>
    h("div", {
      class: `transcript-entry ${entry.kind === "prompt" ? "from-user" : "from-model"}`,
      key: `transcript:${index}`,
    },
      h("span", { class: "round-tag" }, `r${entry.round}`),
      entry.kind === "prompt"
        ? h("p", {}, entry.text)
        : h("pre", { class: "code-block" }, entry.text),
    ));

  return h("section", { class: "panel chat-panel", key: "panel:chat" },
    h("h2", {}, "Conversation"),
    h("div", { class: "transcript", key: "chat:transcript" },
      entries.length ? entries
        : h("p", { class: "empty-state" }, "Describe what you want built.")),
    state.lastError
      ? h("div", { class: "error-bar", key: "chat:error" }, state.lastError)
      : null,
    h("div", { class: "prompt-row", key: "chat:prompt-row" },
      h("textarea", { class: "prompt-input", key: "input:prompt",
        placeholder: "e.g. Help me write a script to crawl media articles" }),
      h("button", {
        class: "action-send", key: "btn:send", valueFrom: "input:prompt",
        disabled: canPrompt && !state.busy ? undefined : "disabled",
        onclick: (prompt: string) => void state.submitPrompt(prompt),
      }, "Send"),
      h("button", {
        class: "action-confirm", key: "btn:confirm",
        disabled: canConfirm && !state.busy ? undefined : "disabled",
        onclick: () => void state.confirmGraph(),
      }, "Confirm graph"),
    ),
    h("div", { class: "status-line", key: "chat:status" },
      `round ${state.triple?.round ?? 0} - ${state.status}`),
  );
}
