// SVG scatter panel. No chart library: the payloads are plain coordinate
// lists and a few hundred <circle> elements render instantly.

import { axisLabel } from "./labels";

const SVG_NS = "http://www.w3.org/2000/svg";
const WIDTH = 420;
const HEIGHT = 360;
const PAD = 40;

const PALETTE = [
  "#1f77b4",
  "#ff7f0e",
  "#2ca02c",
  "#d62728",
  "#9467bd",
  "#8c564b",
  "#e377c2",
  "#7f7f7f",
  "#bcbd22",
  "#17becf",
];

export interface ScatterSpec {
  title: string;
  coords: number[][];
  axisPair: [number, number];
  varianceFractions: number[];
  colorKeys?: (string | null)[];
  pointClass: string;
}

function extent(values: number[]): [number, number] {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (!isFinite(lo) || !isFinite(hi)) {
    lo = -1;
    hi = 1;
  }
  if (lo === hi) {
    lo -= 1;
    hi += 1;
  }
  const margin = 0.05 * (hi - lo);
  return [lo - margin, hi + margin];
}

export function colorScale(keys: (string | null)[]): Map<string, string> {
  const levels = Array.from(new Set(keys.filter((k): k is string => k !== null))).sort();
  const scale = new Map<string, string>();
  levels.forEach((level, i) => scale.set(level, PALETTE[i % PALETTE.length]));
  return scale;
}

function el(name: string): SVGElement {
  return document.createElementNS(SVG_NS, name);
}

/** Replace the contents of `host` with one scatter panel. */
export function renderScatter(host: HTMLElement, spec: ScatterSpec): void {
  const [ai, aj] = spec.axisPair;
  const xs = spec.coords.map((c) => c[ai] ?? 0);
  const ys = spec.coords.map((c) => c[aj] ?? 0);
  const [x0, x1] = extent(xs);
  const [y0, y1] = extent(ys);
  const sx = (v: number) => PAD + ((v - x0) / (x1 - x0)) * (WIDTH - 2 * PAD);
  const sy = (v: number) => HEIGHT - PAD - ((v - y0) / (y1 - y0)) * (HEIGHT - 2 * PAD);

  const svg = el("svg");
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("width", String(WIDTH));
  svg.setAttribute("height", String(HEIGHT));

  const title = el("text");
  title.setAttribute("x", String(WIDTH / 2));
  title.setAttribute("y", "16");
  title.setAttribute("text-anchor", "middle");
  title.setAttribute("class", "panel-title");
  title.textContent = spec.title;
  svg.appendChild(title);

  for (const [v, vertical] of [
    [0, true],
    [0, false],
  ] as [number, boolean][]) {
    const inRange = vertical ? v >= x0 && v <= x1 : v >= y0 && v <= y1;
    if (!inRange) continue;
    const line = el("line");
    if (vertical) {
      line.setAttribute("x1", String(sx(v)));
      line.setAttribute("x2", String(sx(v)));
      line.setAttribute("y1", String(PAD));
      line.setAttribute("y2", String(HEIGHT - PAD));
    } else {
      line.setAttribute("y1", String(sy(v)));
      line.setAttribute("y2", String(sy(v)));
      line.setAttribute("x1", String(PAD));
      line.setAttribute("x2", String(WIDTH - PAD));
    }
    line.setAttribute("stroke", "#ddd");
    svg.appendChild(line);
  }

  const scale = spec.colorKeys ? colorScale(spec.colorKeys) : null;
  spec.coords.forEach((_, i) => {
    const dot = el("circle");
    dot.setAttribute("cx", String(sx(xs[i])));
    dot.setAttribute("cy", String(sy(ys[i])));
    dot.setAttribute("r", "3");
    dot.setAttribute("class", spec.pointClass);
    const key = spec.colorKeys ? spec.colorKeys[i] : null;
    dot.setAttribute("fill", key !== null && scale ? scale.get(key)! : "#1f77b4");
    svg.appendChild(dot);
  });

  const xCaption = el("text");
  xCaption.setAttribute("x", String(WIDTH / 2));
  xCaption.setAttribute("y", String(HEIGHT - 8));
  xCaption.setAttribute("text-anchor", "middle");
  xCaption.setAttribute("class", "axis-caption");
  xCaption.textContent = axisLabel(ai, spec.varianceFractions);
  svg.appendChild(xCaption);

  const yCaption = el("text");
  yCaption.setAttribute("transform", `translate(12 ${HEIGHT / 2}) rotate(-90)`);
  yCaption.setAttribute("text-anchor", "middle");
  yCaption.setAttribute("class", "axis-caption");
  yCaption.textContent = axisLabel(aj, spec.varianceFractions);
  svg.appendChild(yCaption);

  host.replaceChildren(svg);
}

/** Small legend for categorical coloring. */
export function renderLegend(host: HTMLElement, keys: (string | null)[]): void {
  const scale = colorScale(keys);
  host.replaceChildren();
  scale.forEach((color, level) => {
    const item = document.createElement("span");
    item.className = "legend-item";
    const swatch = document.createElement("span");
    swatch.className = "legend-swatch";
    swatch.style.backgroundColor = color;
    item.appendChild(swatch);
    item.appendChild(document.createTextNode(level));
    host.appendChild(item);
  });
}
