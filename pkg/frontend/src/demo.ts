/**
 * Offline demo entry: replays the recorded walkthrough with no network.
 * A "Next step" button advances through the same action sequence a live
 * user would perform; every response comes from the recording.
 */

import { renderApp } from "./app.js";
import type { SessionApi } from "./api.js";
import { FixtureSessionApi, SessionRecording } from "./fixtureApi.js";
import { mount } from "./dom.js";
import { h } from "./vdom.js";
import { ViewState } from "./viewState.js";

export interface DemoStep {
  label: string;
  run: (state: ViewState) => Promise<void> | void;
}

/** The walkthrough as explicit steps; shared by the demo and its tests. */
export function demoSteps(recording: SessionRecording): DemoStep[] {
  const { prompts, edits, instruction } = recording.script;
  return [
    { label: "start session", run: (s) => s.start() },
    { label: "submit first prompt", run: (s) => s.submitPrompt(prompts[0]) },
    {
      label: "queue review edits",
      run: (s) => {
        for (const edit of edits) {
          if (edit.op === "ADD_NODE") {
            s.queueAddNode(edit.node.label, edit.node.detail ?? undefined,
              edit.node.id);
          }
          else if (edit.op === "DELETE_NODE") s.queueDeleteNode(edit.id);
          else if (edit.op === "ADD_EDGE") s.queueAddEdge(edit.edge);
          else if (edit.op === "EDIT_LABEL") s.queueEditLabel(edit.id, edit.label);
          else if (edit.op === "DELETE_EDGE") s.queueDeleteEdge(edit.edge);
        }
      },
    },
    { label: "apply edits", run: (s) => s.commitBuffer() },
    { label: "modify in plain language", run: (s) => s.modify(instruction) },
    {
      label: "expand a supernode",
      run: (s) => {
        const supernode = s.view?.nodes.find((n) => Array.isArray(n.member_ids));
        if (supernode) s.expandSupernode(supernode.id);
      },
    },
    { label: "confirm the graph", run: (s) => s.confirmGraph() },
    { label: "submit follow-up prompt", run: (s) => s.submitPrompt(prompts[1]) },
    { label: "confirm again", run: (s) => s.confirmGraph() },
  ];
}

export function startDemo(container: Element, recording: SessionRecording): void {
  const api: SessionApi = new FixtureSessionApi(recording);
  const state = new ViewState(api);
  const steps = demoSteps(recording);
  let nextStep = 0;

  const render = () => {
    const banner = h("div", { class: "demo-banner", key: "demo:banner" },
      h("strong", {}, "Offline demo"),
      h("span", { class: "demo-progress" },
        nextStep < steps.length
          ? ` next: ${steps[nextStep].label} (${nextStep}/${steps.length})`
          : " walkthrough complete"),
      h("button", {
        class: "demo-next", key: "btn:demo-next",
        disabled: nextStep >= steps.length ? "disabled" : undefined,
        onclick: () => {
          const step = steps[nextStep++];
          void Promise.resolve(step.run(state));
        },
      }, "Next step"),
    );
    mount(h("div", { class: "demo-shell" }, banner, renderApp(state)), container);
  };

  state.subscribe(render);
  render();
}
