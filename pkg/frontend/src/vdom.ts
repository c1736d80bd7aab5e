/**
 * Minimal virtual-node layer.
 *
 * Panels build plain VNode trees; tests assert on those trees directly
 * (rendered structure, never pixels), and the browser entry point mounts
 * them with mount() from dom.ts. Handlers live in props under `on*` keys.
 */

export interface VNode {
  tag: string;
  props: Record<string, unknown>;
  children: (VNode | string)[];
  key?: string;
}

export function h(
  tag: string,
  props: Record<string, unknown> = {},
  ...children: (VNode | string | (VNode | string)[] | null | undefined)[]
): VNode {
  const flat: (VNode | string)[] = [];
  for (const child of children) {
    if (child == null) continue;
    if (Array.isArray(child)) {
      for (const grandchild of child) if (grandchild != null) flat.push(grandchild);
    } else {
      flat.push(child);
    }
  }
  const key = typeof props.key === "string" ? props.key : undefined;
  return { tag, props, children: flat, key };
}

export function text(node: VNode | string): string {
  if (typeof node === "string") return node;
  return node.children.map(text).join("");
}

/** Depth-first search of a VNode tree by predicate. */
export function findAll(
  root: VNode,
  predicate: (node: VNode) => boolean,
): VNode[] {
  const out: VNode[] = [];
  const stack: VNode[] = [root];
  while (stack.length) {
    const node = stack.pop()!;
    if (predicate(node)) out.push(node);
    for (let i = node.children.length - 1; i >= 0; i--) {
      const child = node.children[i];
      if (typeof child !== "string") stack.push(child);   // document order
    }
  }
  return out;
}

export function findByClass(root: VNode, className: string): VNode[] {
  return findAll(root, (node) => {
    const cls = node.props.class;
    return typeof cls === "string" && cls.split(/\s+/).includes(className);
  });
}

export function findByKey(root: VNode, key: string): VNode | undefined {
  return findAll(root, (node) => node.key === key)[0];
}

export function classesOf(node: VNode): string[] {
  const cls = node.props.class;
  return typeof cls === "string" ? cls.split(/\s+/).filter(Boolean) : [];
}
