/**
 * Recorded-session transport for offline demo mode.
 *
 * Replays responses captured from a real mock-server walkthrough, in
 * order, per method; no network is involved anywhere. Calling past the
 * end of a recording throws, which keeps replays honest.
 */

import type { SessionApi } from "./api.js";
import type {
  EditsResult,
  ModifyResult,
  NodeEditDoc,
  PromptResult,
  SessionStateDoc,
  ViewDoc,
} from "./types.js";

export interface SessionRecording {
  createSession: SessionStateDoc[];
  getState: SessionStateDoc[];
  submitPrompt: PromptResult[];
  applyEdits: EditsResult[];
  modifyNl: ModifyResult[];
  confirm: { code: string }[];
  focusIntent: { view: ViewDoc }[];
  /** canonical walkthrough inputs, for drivers that replay the script */
  script: {
    prompts: string[];
    edits: NodeEditDoc[];
    instruction: string;
  };
}

export class FixtureSessionApi implements SessionApi {
  private queues: Map<string, unknown[]>;

  constructor(readonly recording: SessionRecording) {
    this.queues = new Map(Object.entries({
      createSession: [...recording.createSession],
      getState: [...recording.getState],
      submitPrompt: [...recording.submitPrompt],
      applyEdits: [...recording.applyEdits],
      modifyNl: [...recording.modifyNl],
      confirm: [...recording.confirm],
      focusIntent: [...recording.focusIntent],
    }));
  }

  private next<T>(method: string): Promise<T> {
    const queue = this.queues.get(method)!;
    if (!queue.length) {
      return Promise.reject(
        new Error(`recording exhausted for ${method}; restart the demo`));
    }
    return Promise.resolve(queue.shift() as T);
  }

  createSession(): Promise<SessionStateDoc> { return this.next("createSession"); }
  getState(): Promise<SessionStateDoc> { return this.next("getState"); }
  submitPrompt(): Promise<PromptResult> { return this.next("submitPrompt"); }
  applyEdits(): Promise<EditsResult> { return this.next("applyEdits"); }
  modifyNl(): Promise<ModifyResult> { return this.next("modifyNl"); }
  confirm(): Promise<{ code: string }> { return this.next("confirm"); }
  focusIntent(): Promise<{ view: ViewDoc }> { return this.next("focusIntent"); }
}
