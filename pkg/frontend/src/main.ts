/**
 * Live entry point: connects to a running session server, opens a session,
 * and re-renders on every local change or server push notification.
 */

import { HttpSessionApi } from "./api.js";
import { renderApp } from "./app.js";
import { mount } from "./dom.js";
import { ViewState } from "./viewState.js";

export async function startApp(container: Element, serverUrl?: string): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const base = serverUrl ?? params.get("server") ?? "http://127.0.0.1:8731";
  const api = new HttpSessionApi(base);
  const state = new ViewState(api);

  state.subscribe(() => mount(renderApp(state), container));
  await state.start();

  api.subscribe?.(state.sessionId, () => {
    void state.load(state.sessionId);
  });
  mount(renderApp(state), container);
}
