/** 2-D scatter of the latent traversal: path points, retrieved results, gold.
 *
 * Marks carry distinct kinds (path = circle, result = square, gold = plus)
 * and the path mark for the slider-selected step gets an "active" class.
 */

import { TraverseResponse } from "./api.js";

export type MarkKind = "path" | "result" | "gold";

export interface Mark {
  x: number;
  y: number;
  kind: MarkKind;
  label: string;
  kappa?: number;
}

export function scatterMarks(traversal: TraverseResponse): Mark[] {
  const marks: Mark[] = [];
  traversal.pca.path.forEach(([x, y], kappa) => {
    marks.push({ x, y, kind: "path", label: `step ${kappa}`, kappa });
  });
  for (const r of traversal.pca.results) {
    marks.push({ x: r.xy[0], y: r.xy[1], kind: "result", label: r.doc_id });
  }
  const [gx, gy] = traversal.pca.gold;
  marks.push({ x: gx, y: gy, kind: "gold", label: traversal.doc_id });
  return marks;
}

const SVG_NS = "http://www.w3.org/2000/svg";

export function renderScatter(
  svg: SVGSVGElement,
  marks: Mark[],
  activeKappa: number,
  width = 420,
  height = 280,
): void {
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  while (svg.firstChild) {
    svg.removeChild(svg.firstChild);
  }
  if (marks.length === 0) {
    return;
  }
  const xs = marks.map((m) => m.x);
  const ys = marks.map((m) => m.y);
  const pad = 18;
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  const sx = (x: number) =>
    xMax === xMin ? width / 2 : pad + ((x - xMin) / (xMax - xMin)) * (width - 2 * pad);
  const sy = (y: number) =>
    yMax === yMin ? height / 2 : height - pad - ((y - yMin) / (yMax - yMin)) * (height - 2 * pad);

  for (const mark of marks) {
    const x = sx(mark.x);
    const y = sy(mark.y);
    let el: SVGElement;
    if (mark.kind === "path") {
      el = document.createElementNS(SVG_NS, "circle");
      el.setAttribute("cx", String(x));
      el.setAttribute("cy", String(y));
      el.setAttribute("r", "5");
      if (mark.kappa !== undefined) {
        el.setAttribute("data-kappa", String(mark.kappa));
        if (mark.kappa === activeKappa) {
          el.classList.add("active");
        }
      }
    } else if (mark.kind === "result") {
      el = document.createElementNS(SVG_NS, "rect");
      el.setAttribute("x", String(x - 5));
      el.setAttribute("y", String(y - 5));
      el.setAttribute("width", "10");
      el.setAttribute("height", "10");
    } else {
      el = document.createElementNS(SVG_NS, "path");
      el.setAttribute(
        "d",
        `M ${x - 7} ${y} H ${x + 7} M ${x} ${y - 7} V ${y + 7}`,
      );
    }
    el.classList.add("mark", `mark-${mark.kind}`);
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = mark.label;
    el.appendChild(title);
    svg.appendChild(el);
  }
}
