/**
 * Browser mount layer. Tests never import this module: they assert on
 * VNode trees. Rendering is a full re-mount per state change with
 * input/textarea values carried over by key; buttons whose handlers take
 * a text argument declare `valueFrom: "<key of input>"` and the click
 * wiring reads (and clears) that element's value.
 */

import { VNode } from "./vdom.js";

const SVG_TAGS = new Set([
  "svg", "g", "rect", "text", "line", "path", "circle", "ellipse",
  "polygon", "polyline", "defs", "marker", "title",
]);
const SVG_NS = "http://www.w3.org/2000/svg";

interface MountContext {
  byKey: Map<string, Element>;
  pendingValueFrom: Array<{ element: HTMLElement; fromKey: string; handler: (value: string) => void }>;
}

export function mount(root: VNode, container: Element): void {
  const previousValues = new Map<string, string>();
  for (const element of Array.from(container.querySelectorAll("[data-vkey]"))) {
    const input = element as HTMLInputElement | HTMLTextAreaElement;
    if (typeof input.value === "string") {
      previousValues.set(element.getAttribute("data-vkey")!, input.value);
    }
  }
  const context: MountContext = { byKey: new Map(), pendingValueFrom: [] };
  const tree = build(root, context);
  container.replaceChildren(tree);

  for (const { element, fromKey, handler } of context.pendingValueFrom) {
    element.addEventListener("click", () => {
      const source = context.byKey.get(fromKey) as
        HTMLInputElement | HTMLTextAreaElement | undefined;
      const value = source?.value ?? "";
      if (source) source.value = "";
      handler(value);
    });
  }
  for (const [key, value] of previousValues) {
    const element = context.byKey.get(key) as
      HTMLInputElement | HTMLTextAreaElement | undefined;
    if (element && !element.value) element.value = value;
  }
}

function build(node: VNode | string, context: MountContext): Node {
  if (typeof node === "string") return document.createTextNode(node);
  const element = SVG_TAGS.has(node.tag)
    ? document.createElementNS(SVG_NS, node.tag)
    : document.createElement(node.tag);

  const valueFrom = node.props.valueFrom as string | undefined;
  for (const [name, value] of Object.entries(node.props)) {
    if (value == null || name === "key" || name === "valueFrom") continue;
    if (name === "onclick") {
      if (valueFrom) {
        context.pendingValueFrom.push({
          element: element as HTMLElement,
          fromKey: valueFrom,
          handler: value as (text: string) => void,
        });
      } else {
        element.addEventListener("click", (event) => {
          event.stopPropagation();
          (value as () => void)();
        });
      }
    } else if (name === "onpointerdrag") {
      wireDrag(element as SVGGElement, value as (x: number, y: number) => void);
    } else if (typeof value !== "function") {
      element.setAttribute(name, String(value));
    }
  }
  if (node.key) {
    element.setAttribute("data-vkey", node.key);
    context.byKey.set(node.key, element);
  }
  for (const child of node.children) element.appendChild(build(child, context));
  return element;
}

/** Drag a graph node: pointer deltas scaled into viewBox coordinates. */
function wireDrag(element: SVGGElement, onDrag: (x: number, y: number) => void): void {
  element.addEventListener("pointerdown", (down) => {
    down.preventDefault();
    const svg = element.ownerSVGElement;
    if (!svg) return;
    const viewBox = svg.viewBox.baseVal;
    const bounds = svg.getBoundingClientRect();
    const scaleX = viewBox.width / bounds.width;
    const scaleY = viewBox.height / bounds.height;
    const transform = element.getAttribute("transform") ?? "translate(0,0)";
    const match = /translate\(([-\d.]+),([-\d.]+)\)/.exec(transform);
    const origin = { x: Number(match?.[1] ?? 0), y: Number(match?.[2] ?? 0) };
    const start = { x: down.clientX, y: down.clientY };

    const move = (event: PointerEvent) => {
      const x = origin.x + (event.clientX - start.x) * scaleX;
      const y = origin.y + (event.clientY - start.y) * scaleY;
      element.setAttribute("transform", `translate(${x},${y})`);
    };
    const up = (event: PointerEvent) => {
      window.removeEventListener("pointermove", move);
      window.removeEventListener("pointerup", up);
      const x = origin.x + (event.clientX - start.x) * scaleX;
      const y = origin.y + (event.clientY - start.y) * scaleY;
      if (Math.abs(event.clientX - start.x) + Math.abs(event.clientY - start.y) > 3) {
        onDrag(x, y);
      }
    };
    window.addEventListener("pointermove", move);
    window.addEventListener("pointerup", up);
  });
}
