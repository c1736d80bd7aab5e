/** Wire types for the session server's /v1/ documents. */

export type IntentState = "COMPLETED" | "NOT_COMPLETED";
export type TaskOrigin = "EXTRACTED" | "USER_ADDED" | "NL_MODIFIED";
export type EdgeKind = "DEPENDENCY" | "DATA_FLOW";

export interface IntentNodeDoc {
  id: string;
  text: string;
  state: IntentState;
  children: string[];
}

export interface IntentTreeDoc {
  root: string;
  nodes: IntentNodeDoc[];
  version: number;
}

export interface TaskNodeDoc {
  id: string;
  label: string;
  detail: string | null;
  origin: TaskOrigin;
}

export interface TaskEdgeDoc {
  src: string;
  dst: string;
  kind: EdgeKind;
}

export interface TripleDoc {
  intent_tree: IntentTreeDoc;
  graph: { nodes: TaskNodeDoc[]; edges: TaskEdgeDoc[] };
  mapping: { entries: { intent_id: string; task_node_ids: string[] }[] };
  round: number;
}

/** Simplified-view node: supernodes are the entries carrying member_ids. */
export interface ViewNodeDoc {
  id: string;
  label: string;
  detail?: string | null;
  origin?: TaskOrigin;
  member_count?: number;
  member_ids?: string[];
}

export interface ViewDoc {
  nodes: ViewNodeDoc[];
  edges: TaskEdgeDoc[];
  highlight: string[];
  collapse: Record<string, string>;
}

export interface GraphDeltaDoc {
  added_nodes: TaskNodeDoc[];
  removed_node_ids: string[];
  relabelled_nodes: TaskNodeDoc[];
  added_edges: TaskEdgeDoc[];
  removed_edges: TaskEdgeDoc[];
}

export type SessionStatus = "AWAITING_PROMPT" | "GRAPH_REVIEW" | "GENERATED";

export interface TranscriptEntry {
  round: number;
  kind: "prompt" | "code";
  text: string;
}

export interface SessionStateDoc {
  id: string;
  status: SessionStatus;
  round: number;
  triple: TripleDoc | null;
  view: ViewDoc | null;
  focus: string[];
  base_graph: unknown;
  pending_delta: GraphDeltaDoc | null;
  transcript: TranscriptEntry[];
}

export interface PromptResult {
  triple: TripleDoc;
  view: ViewDoc;
  graph_delta: GraphDeltaDoc;
  focus: string[];
}

export interface EditsResult {
  triple: TripleDoc;
  view: ViewDoc;
}

export interface ModifyResult extends EditsResult {
  graph_delta: GraphDeltaDoc;
}

/** Node-level edit payloads, mirroring the server's NodeEdit contract. */
export type NodeEditDoc =
  | { op: "ADD_NODE"; node: { id?: string; label: string; detail?: string | null } }
  | { op: "DELETE_NODE"; id: string }
  | { op: "EDIT_LABEL"; id: string; label: string; detail?: string | null }
  | { op: "ADD_EDGE"; edge: TaskEdgeDoc }
  | { op: "DELETE_EDGE"; edge: TaskEdgeDoc };

export interface PushEvent {
  session_id: string;
  event: string;
  seq: number;
  status: SessionStatus;
}

export function isSupernode(node: ViewNodeDoc): boolean {
  return Array.isArray(node.member_ids);
}
