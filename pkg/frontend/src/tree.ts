// Version-tree view model and SVG rendering.  Pure payload in, DOM out:
// every node is rendered exactly once and the HEAD commit is highlighted.

import type { TreeWire } from "./types.js";

export interface LaidOutNode {
  id: string;
  parent: string | null;
  message: string;
  strokeCount: number;
  branch: string;
  row: number;
  column: number;
  isHead: boolean;
  isBranchTip: boolean;
}

export class TreeViewModel {
  nodes: LaidOutNode[] = [];
  selected: string | null = null;
  headId: string | null = null;

  constructor(public payload: TreeWire) {
    const columns = new Map<string, number>();
    let nextColumn = 0;
    const headTip =
      payload.head.kind === "branch" ? payload.branches[payload.head.value] : payload.head.value;
    this.headId = headTip ?? null;
    const tips = new Set(Object.values(payload.branches).filter(Boolean) as string[]);
    payload.nodes.forEach((node, index) => {
      if (!columns.has(node.branch_hint)) {
        columns.set(node.branch_hint, nextColumn++);
      }
      this.nodes.push({
        id: node.id,
        parent: node.parent,
        message: node.message,
        strokeCount: node.stroke_count,
        branch: node.branch_hint,
        row: index,
        column: columns.get(node.branch_hint)!,
        isHead: node.id === headTip,
        isBranchTip: tips.has(node.id),
      });
    });
  }

  branchCount(): number {
    return Object.keys(this.payload.branches).length;
  }

  node(id: string): LaidOutNode | undefined {
    return this.nodes.find((n) => n.id === id);
  }
}

const SPACING_X = 46;
const SPACING_Y = 34;
const RADIUS = 9;

export function renderTree(
  model: TreeViewModel,
  container: HTMLElement,
  onSelect: (id: string) => void,
): SVGSVGElement {
  container.textContent = "";
  const doc = container.ownerDocument;
  const svgNS = "http://www.w3.org/2000/svg";
  const svg = doc.createElementNS(svgNS, "svg") as SVGSVGElement;
  const width = Math.max(1, ...model.nodes.map((n) => n.column + 1)) * SPACING_X + 220;
  const height = (model.nodes.length + 1) * SPACING_Y;
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "version-tree");

  const place = (n: LaidOutNode) => ({
    x: 24 + n.column * SPACING_X,
    y: 20 + n.row * SPACING_Y,
  });
  const byId = new Map(model.nodes.map((n) => [n.id, n]));

  for (const node of model.nodes) {
    if (!node.parent) continue;
    const parent = byId.get(node.parent);
    if (!parent) continue;
    const a = place(parent);
    const b = place(node);
    const line = doc.createElementNS(svgNS, "line");
    line.setAttribute("x1", String(a.x));
    line.setAttribute("y1", String(a.y));
    line.setAttribute("x2", String(b.x));
    line.setAttribute("y2", String(b.y));
    line.setAttribute("class", "tree-edge");
    svg.appendChild(line);
  }

  for (const node of model.nodes) {
    const { x, y } = place(node);
    const circle = doc.createElementNS(svgNS, "circle");
    circle.setAttribute("cx", String(x));
    circle.setAttribute("cy", String(y));
    circle.setAttribute("r", String(RADIUS));
    circle.setAttribute("data-commit", node.id);
    const classes = ["tree-node"];
    if (node.isHead) classes.push("head");
    if (node.isBranchTip) classes.push("tip");
    if (model.selected === node.id) classes.push("selected");
    circle.setAttribute("class", classes.join(" "));
    circle.addEventListener("click", () => onSelect(node.id));
    svg.appendChild(circle);

    const label = doc.createElementNS(svgNS, "text");
    label.setAttribute("x", String(x + 16));
    label.setAttribute("y", String(y + 4));
    label.setAttribute("class", "tree-label");
    label.textContent = `${node.message || "(no message)"} [${node.strokeCount}]`;
    svg.appendChild(label);
  }

  container.appendChild(svg);
  return svg;
}
