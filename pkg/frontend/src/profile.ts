// Profile-likelihood strip: a small line chart with a fixed marker at the
// selected optimum and a second marker tracking the slider.

const SVG_NS = "http://www.w3.org/2000/svg";
const WIDTH = 860;
const HEIGHT = 110;
const PAD_X = 40;
const PAD_Y = 16;

function el(name: string): SVGElement {
  return document.createElementNS(SVG_NS, name);
}

export class ProfileStrip {
  private trace: [number, number][] | null = null;
  private rHat: number | null = null;

  constructor(private host: HTMLElement) {}

  setData(trace: [number, number][] | null, rHat: number | null): void {
    this.trace = trace;
    this.rHat = rHat;
    if (!trace || trace.length === 0) {
      // fixed-r runs have no profile to show
      this.host.hidden = true;
      this.host.replaceChildren();
      return;
    }
    this.host.hidden = false;
  }

  render(currentR: number | null): void {
    if (!this.trace || this.trace.length === 0) {
      return;
    }
    const rs = this.trace.map((p) => p[0]);
    const lls = this.trace.map((p) => p[1]);
    let lo = Math.min(...lls);
    let hi = Math.max(...lls);
    if (hi - lo < 1e-12) {
      // flat profile still renders as a visible horizontal line
      lo -= 1;
      hi += 1;
    }
    const sx = (r: number) => PAD_X + r * (WIDTH - 2 * PAD_X);
    const sy = (v: number) => HEIGHT - PAD_Y - ((v - lo) / (hi - lo)) * (HEIGHT - 2 * PAD_Y);

    const svg = el("svg");
    svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
    svg.setAttribute("width", String(WIDTH));
    svg.setAttribute("height", String(HEIGHT));

    const path = el("polyline");
    path.setAttribute(
      "points",
      rs.map((r, i) => `${sx(r)},${sy(lls[i])}`).join(" ")
    );
    path.setAttribute("fill", "none");
    path.setAttribute("stroke", "#1f77b4");
    path.setAttribute("stroke-width", "1.2");
    path.setAttribute("class", "profile-line");
    svg.appendChild(path);

    if (this.rHat !== null) {
      const marker = el("circle");
      marker.setAttribute("cx", String(sx(this.rHat)));
      marker.setAttribute("cy", String(sy(this.valueAt(this.rHat))));
      marker.setAttribute("r", "4");
      marker.setAttribute("fill", "#d62728");
      marker.setAttribute("class", "profile-optimum");
      svg.appendChild(marker);
    }

    if (currentR !== null) {
      const cursor = el("line");
      cursor.setAttribute("x1", String(sx(currentR)));
      cursor.setAttribute("x2", String(sx(currentR)));
      cursor.setAttribute("y1", String(PAD_Y));
      cursor.setAttribute("y2", String(HEIGHT - PAD_Y));
      cursor.setAttribute("stroke", "#555");
      cursor.setAttribute("stroke-dasharray", "3 3");
      cursor.setAttribute("class", "profile-cursor");
      svg.appendChild(cursor);
    }

    // hover targets: native tooltips report the exact (r, log-likelihood)
    this.trace.forEach(([r, ll]) => {
      const dot = el("circle");
      dot.setAttribute("cx", String(sx(r)));
      dot.setAttribute("cy", String(sy(ll)));
      dot.setAttribute("r", "3");
      dot.setAttribute("fill", "transparent");
      dot.setAttribute("class", "profile-hover");
      const tip = el("title");
      tip.textContent = `r = ${r}, log-likelihood = ${ll}`;
      dot.appendChild(tip);
      svg.appendChild(dot);
    });

    const caption = el("text");
    caption.setAttribute("x", String(WIDTH / 2));
    caption.setAttribute("y", String(HEIGHT - 2));
    caption.setAttribute("text-anchor", "middle");
    caption.setAttribute("class", "axis-caption");
    caption.textContent = "profile log-likelihood over r";
    svg.appendChild(caption);

    this.host.replaceChildren(svg);
  }

  /** Nearest-trace-point lookup, close enough for a 201-point grid. */
  valueAt(r: number): number {
    if (!this.trace || this.trace.length === 0) {
      return 0;
    }
    let best = this.trace[0];
    for (const pt of this.trace) {
      if (Math.abs(pt[0] - r) < Math.abs(best[0] - r)) {
        best = pt;
      }
    }
    return best[1];
  }
}
