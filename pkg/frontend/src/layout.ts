/**
 * Node placement for the graph panels.
 *
 * Acyclic graphs get layered left-to-right layout by longest-path
 * topological rank; graphs with cycles fall back to a small deterministic
 * force simulation (fixed iteration count, positions seeded from node
 * ids, no randomness source), so the same graph always lands in the same
 * place.
 */

export interface Point {
  x: number;
  y: number;
}

export interface LayoutEdge {
  src: string;
  dst: string;
}

const COLUMN_WIDTH = 190;
const ROW_HEIGHT = 86;
const MARGIN = 60;

export function topologicalRanks(
  ids: string[],
  edges: LayoutEdge[],
): Map<string, number> | null {
  const incoming = new Map<string, number>(ids.map((id) => [id, 0]));
  const outgoing = new Map<string, string[]>(ids.map((id) => [id, []]));
  for (const edge of edges) {
    if (!incoming.has(edge.src) || !incoming.has(edge.dst)) continue;
    incoming.set(edge.dst, (incoming.get(edge.dst) ?? 0) + 1);
    outgoing.get(edge.src)!.push(edge.dst);
  }
  const ranks = new Map<string, number>();
  const queue = ids.filter((id) => incoming.get(id) === 0).sort();
  for (const id of queue) ranks.set(id, 0);
  let index = 0;
  while (index < queue.length) {
    const id = queue[index++];
    for (const next of [...outgoing.get(id)!].sort()) {
      const candidate = (ranks.get(id) ?? 0) + 1;
      if (candidate > (ranks.get(next) ?? 0)) ranks.set(next, candidate);
      incoming.set(next, incoming.get(next)! - 1);
      if (incoming.get(next) === 0) queue.push(next);
    }
  }
  return queue.length === ids.length ? ranks : null;   // null: cycle present
}

export function layoutGraph(ids: string[], edges: LayoutEdge[]): Map<string, Point> {
  const ranks = topologicalRanks(ids, edges);
  if (ranks !== null) return layeredPositions(ids, ranks);
  return forcePositions(ids, edges);
}

function layeredPositions(ids: string[], ranks: Map<string, number>): Map<string, Point> {
  const byRank = new Map<number, string[]>();
  for (const id of [...ids].sort()) {
    const rank = ranks.get(id) ?? 0;
    if (!byRank.has(rank)) byRank.set(rank, []);
    byRank.get(rank)!.push(id);
  }
  const points = new Map<string, Point>();
  for (const [rank, column] of byRank) {
    column.forEach((id, row) => {
      points.set(id, {
        x: MARGIN + rank * COLUMN_WIDTH,
        y: MARGIN + row * ROW_HEIGHT,
      });
    });
  }
  return points;
}

/** Deterministic hash in [0, 1) used to seed force positions. */
function seededUnit(id: string, salt: number): number {
  let hash = 2166136261 ^ salt;
  for (let i = 0; i < id.length; i++) {
    hash = Math.imul(hash ^ id.charCodeAt(i), 16777619);
  }
  return ((hash >>> 0) % 10_000) / 10_000;
}

function forcePositions(ids: string[], edges: LayoutEdge[]): Map<string, Point> {
  const size = Math.max(420, Math.ceil(Math.sqrt(ids.length)) * COLUMN_WIDTH);
  const positions = new Map<string, Point>(ids.map((id) => [id, {
    x: MARGIN + seededUnit(id, 1) * size,
    y: MARGIN + seededUnit(id, 2) * size,
  }]));
  const idealDistance = COLUMN_WIDTH * 0.9;
  for (let iteration = 0; iteration < 120; iteration++) {
    const forces = new Map<string, Point>(ids.map((id) => [id, { x: 0, y: 0 }]));
    for (let i = 0; i < ids.length; i++) {
      for (let j = i + 1; j < ids.length; j++) {
        const a = positions.get(ids[i])!;
        const b = positions.get(ids[j])!;
        const dx = a.x - b.x, dy = a.y - b.y;
        const distSq = Math.max(dx * dx + dy * dy, 1);
        const push = (idealDistance * idealDistance) / distSq;
        forces.get(ids[i])!.x += dx * push * 0.01;
        forces.get(ids[i])!.y += dy * push * 0.01;
        forces.get(ids[j])!.x -= dx * push * 0.01;
        forces.get(ids[j])!.y -= dy * push * 0.01;
      }
    }
    for (const edge of edges) {
      const a = positions.get(edge.src), b = positions.get(edge.dst);
      if (!a || !b) continue;
      const dx = b.x - a.x, dy = b.y - a.y;
      forces.get(edge.src)!.x += dx * 0.02;
      forces.get(edge.src)!.y += dy * 0.02;
      forces.get(edge.dst)!.x -= dx * 0.02;
      forces.get(edge.dst)!.y -= dy * 0.02;
    }
    for (const id of ids) {
      const position = positions.get(id)!;
      const force = forces.get(id)!;
      position.x = Math.max(MARGIN, position.x + force.x);
      position.y = Math.max(MARGIN, position.y + force.y);
    }
  }
  return positions;
}
