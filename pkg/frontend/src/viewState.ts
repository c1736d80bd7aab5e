/**
 * Client-side session state: the latest server-confirmed documents plus a
 * local pending edit buffer.
 *
 * What the panels render is always serverState + buffer: queued node
 * edits preview immediately but reach the server only on commit (one
 * transaction), and the buffer empties on commit or discard. Anything the
 * buffer would break client-side (self-edges, dangling ids, duplicate
 * edges) is rejected before it can reach the server; everything else is
 * the server's call and its validation errors are surfaced verbatim.
 */

import type { SessionApi } from "./api.js";
import { ApiError } from "./api.js";
import type {
  EdgeKind,
  GraphDeltaDoc,
  NodeEditDoc,
  SessionStateDoc,
  SessionStatus,
  TaskEdgeDoc,
  TaskNodeDoc,
  TripleDoc,
  ViewDoc,
} from "./types.js";

export interface RenderedGraph {
  nodes: TaskNodeDoc[];
  edges: TaskEdgeDoc[];
  /** node id -> pending marker for styling queued-but-uncommitted work */
  pendingNodes: Map<string, "add" | "delete" | "relabel">;
  pendingEdges: Map<string, "add" | "delete">;
}

export type Listener = () => void;

export function edgeKey(edge: TaskEdgeDoc): string {
  return `${edge.src}->${edge.dst}:${edge.kind}`;
}

export class ViewState {
  sessionId = "";
  status: SessionStatus = "AWAITING_PROMPT";
  triple: TripleDoc | null = null;
  view: ViewDoc | null = null;
  focus: string[] = [];
  lastDelta: GraphDeltaDoc | null = null;
  transcript: { round: number; kind: "prompt" | "code"; text: string }[] = [];
  generatedCode: string | null = null;

  selection: string[] = [];            // ordered; first two form a link
  pendingEdits: NodeEditDoc[] = [];
  regionHighlight: string[] = [];      // supernode expansion echo in Panel B
  dragPositions = new Map<string, { x: number; y: number }>();
  lastError: string | null = null;
  busy = false;

  private listeners: Listener[] = [];
  private addSerial = 0;

  constructor(private readonly api: SessionApi) {}

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  // -- server round trips -----------------------------------------------

  async start(sessionId?: string): Promise<void> {
    const state = await this.api.createSession(sessionId);
    this.applyServerState(state);
  }

  async load(sessionId: string): Promise<void> {
    this.applyServerState(await this.api.getState(sessionId));
  }

  applyServerState(state: SessionStateDoc): void {
    this.sessionId = state.id;
    this.status = state.status;
    this.triple = state.triple;
    this.view = state.view;
    this.focus = state.focus;
    this.lastDelta = state.pending_delta;
    this.transcript = state.transcript;
    const codes = state.transcript.filter((entry) => entry.kind === "code");
    this.generatedCode = codes.length ? codes[codes.length - 1].text : null;
    this.emit();
  }

  async submitPrompt(prompt: string): Promise<void> {
    await this.mutate(async () => {
      const result = await this.api.submitPrompt(this.sessionId, prompt);
      this.triple = result.triple;
      this.view = result.view;
      this.focus = result.focus;
      this.lastDelta = result.graph_delta;
      this.status = "GRAPH_REVIEW";
      this.transcript = [...this.transcript,
        { round: result.triple.round, kind: "prompt", text: prompt }];
      this.pendingEdits = [];
      this.selection = [];
      this.regionHighlight = [];
    });
  }

  async modify(instruction: string): Promise<void> {
    await this.mutate(async () => {
      const result = await this.api.modifyNl(this.sessionId, instruction);
      this.triple = result.triple;
      this.view = result.view;
      this.lastDelta = result.graph_delta;
      this.regionHighlight = [];
    });
  }

  async confirmGraph(): Promise<void> {
    await this.mutate(async () => {
      const result = await this.api.confirm(this.sessionId);
      this.generatedCode = result.code;
      this.status = "GENERATED";
      this.transcript = [...this.transcript,
        { round: this.triple?.round ?? 0, kind: "code", text: result.code }];
    });
  }

  async focusIntent(intentId: string): Promise<void> {
    await this.mutate(async () => {
      const result = await this.api.focusIntent(this.sessionId, intentId);
      this.view = result.view;
      this.focus = [intentId];
      this.regionHighlight = [];
    });
  }

  /** Commit the whole buffer as one transaction. */
  async commitBuffer(): Promise<void> {
    if (!this.pendingEdits.length) return;
    const edits = this.pendingEdits;
    await this.mutate(async () => {
      const result = await this.api.applyEdits(this.sessionId, edits);
      this.triple = result.triple;
      this.view = result.view;
      this.pendingEdits = [];
      this.selection = [];
    });
  }

  discardBuffer(): void {
    this.pendingEdits = [];
    this.lastError = null;
    this.emit();
  }

  private async mutate(action: () => Promise<void>): Promise<void> {
    this.busy = true;
    this.lastError = null;
    this.emit();
    try {
      await action();
    } catch (error) {
      // server-side validation messages are shown verbatim
      this.lastError = error instanceof ApiError
        ? `${error.errorType}: ${error.message}`
        : String(error);
    } finally {
      this.busy = false;
      this.emit();
    }
  }

  // -- local edit buffer ----------------------------------------------------

  queueAddNode(label: string, detail?: string, explicitId?: string): string | null {
    if (!label.trim()) {
      this.fail("a new node needs a label");
      return null;
    }
    let id = explicitId;
    if (!id) {
      this.addSerial += 1;
      id = `new.${this.addSerial}`;
    }
    if (this.renderedGraph().nodes.some((node) => node.id === id)) {
      this.fail(`node id ${id} is taken`);
      return null;
    }
    this.pendingEdits = [...this.pendingEdits,
      { op: "ADD_NODE", node: { id, label, detail: detail ?? null } }];
    this.emit();
    return id;
  }

  queueDeleteNode(id: string): void {
    if (!this.renderedGraph().nodes.some((node) => node.id === id)) {
      this.fail(`no node ${id} to delete`);
      return;
    }
    this.pendingEdits = [...this.pendingEdits, { op: "DELETE_NODE", id }];
    this.selection = this.selection.filter((selected) => selected !== id);
    this.emit();
  }

  queueEditLabel(id: string, label: string): void {
    if (!label.trim()) {
      this.fail("label cannot be empty");
      return;
    }
    this.pendingEdits = [...this.pendingEdits, { op: "EDIT_LABEL", id, label }];
    this.emit();
  }

  /** Link the first two selected nodes; mirrors the server's edge rules. */
  queueLinkSelection(kind: EdgeKind = "DEPENDENCY"): void {
    if (this.selection.length < 2) {
      this.fail("select two nodes to link");
      return;
    }
    this.queueAddEdge({ src: this.selection[0], dst: this.selection[1], kind });
  }

  queueAddEdge(edge: TaskEdgeDoc): void {
    if (edge.src === edge.dst) {
      this.fail("self-edges are not allowed");
      return;
    }
    const graph = this.renderedGraph();
    const ids = new Set(graph.nodes.map((node) => node.id));
    if (!ids.has(edge.src) || !ids.has(edge.dst)) {
      this.fail("both edge endpoints must exist");
      return;
    }
    if (graph.edges.some((existing) => edgeKey(existing) === edgeKey(edge))) {
      this.fail("that edge already exists");
      return;
    }
    this.pendingEdits = [...this.pendingEdits, { op: "ADD_EDGE", edge }];
    this.emit();
  }

  queueDeleteEdge(edge: TaskEdgeDoc): void {
    this.pendingEdits = [...this.pendingEdits, { op: "DELETE_EDGE", edge }];
    this.emit();
  }

  toggleSelect(id: string): void {
    this.selection = this.selection.includes(id)
      ? this.selection.filter((selected) => selected !== id)
      : [...this.selection, id];
    this.emit();
  }

  expandSupernode(superId: string): void {
    const node = this.view?.nodes.find((candidate) => candidate.id === superId);
    if (!node || !node.member_ids) {
      this.fail(`${superId} is not a supernode`);
      return;
    }
    this.regionHighlight = [...node.member_ids];
    this.emit();
  }

  dragNode(id: string, x: number, y: number): void {
    this.dragPositions.set(id, { x, y });
    this.emit();
  }

  private fail(message: string): void {
    this.lastError = message;
    this.emit();
  }

  // -- derived rendering state ------------------------------------------------

  /** Server graph with the pending buffer applied (the preview contract). */
  renderedGraph(): RenderedGraph {
    const nodes = new Map<string, TaskNodeDoc>();
    for (const node of this.triple?.graph.nodes ?? []) nodes.set(node.id, node);
    const edges = new Map<string, TaskEdgeDoc>();
    for (const edge of this.triple?.graph.edges ?? []) edges.set(edgeKey(edge), edge);
    const pendingNodes = new Map<string, "add" | "delete" | "relabel">();
    const pendingEdges = new Map<string, "add" | "delete">();

    for (const edit of this.pendingEdits) {
      if (edit.op === "ADD_NODE") {
        const id = edit.node.id ?? `new.${nodes.size}`;
        nodes.set(id, {
          id,
          label: edit.node.label,
          detail: edit.node.detail ?? null,
          origin: "USER_ADDED",
        });
        pendingNodes.set(id, "add");
      } else if (edit.op === "DELETE_NODE") {
        nodes.delete(edit.id);
        pendingNodes.set(edit.id, "delete");
        for (const [key, edge] of [...edges]) {
          if (edge.src === edit.id || edge.dst === edit.id) edges.delete(key);
        }
      } else if (edit.op === "EDIT_LABEL") {
        const existing = nodes.get(edit.id);
        if (existing) {
          nodes.set(edit.id, { ...existing, label: edit.label });
          pendingNodes.set(edit.id, "relabel");
        }
      } else if (edit.op === "ADD_EDGE") {
        edges.set(edgeKey(edit.edge), edit.edge);
        pendingEdges.set(edgeKey(edit.edge), "add");
      } else if (edit.op === "DELETE_EDGE") {
        edges.delete(edgeKey(edit.edge));
        pendingEdges.set(edgeKey(edit.edge), "delete");
      }
    }
    return {
      nodes: [...nodes.values()],
      edges: [...edges.values()],
      pendingNodes,
      pendingEdges,
    };
  }

  changedNodeIds(): Set<string> {
    const delta = this.lastDelta;
    if (!delta) return new Set();
    return new Set([
      ...delta.added_nodes.map((node) => node.id),
      ...delta.relabelled_nodes.map((node) => node.id),
    ]);
  }
}
