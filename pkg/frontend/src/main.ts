// Explorer bootstrap: wires the slider over the precomputed grid to the
// linked sample/variable panels and the profile strip. Strictly read-only:
// the only network traffic is GETs against the grid server.

import { GridClient, GridEntry, Meta } from "./api";
import { rLabel } from "./labels";
import { ProfileStrip } from "./profile";
import { renderLegend, renderScatter } from "./scatter";
import { clampState, initialState, PanelMode, ViewState } from "./state";

function byId<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing #${id}`);
  }
  return node as T;
}

export class ExplorerApp {
  state: ViewState = initialState();
  private meta: Meta | null = null;
  private profile: ProfileStrip;
  private renderSeq = 0; // supersedes stale in-flight fetches
  private configured = false;

  constructor(private client: GridClient, private root: Document = document) {
    this.profile = new ProfileStrip(byId("profile-strip"));
    // wired here so a failed boot can still be retried
    byId<HTMLButtonElement>("retry-button").addEventListener("click", () => {
      void this.start();
    });
  }

  // -- boot ---------------------------------------------------------------

  async start(): Promise<void> {
    try {
      this.meta = await this.client.meta();
    } catch (err) {
      this.showBanner(`could not reach the grid server: ${err}`, true);
      return;
    }
    this.hideBanner();
    this.configureControls(this.meta);
    try {
      const prof = await this.client.profile();
      this.profile.setData(prof.profile_trace, prof.r_hat);
    } catch {
      this.profile.setData(null, null);
    }
    await this.select(this.state.gridIndex);
  }

  private configureControls(meta: Meta): void {
    this.state = clampState(this.state, meta.r_values.length, meta.k);

    const slider = byId<HTMLInputElement>("r-slider");
    slider.min = "0";
    slider.max = String(meta.r_values.length - 1);
    slider.step = "1";
    slider.value = String(this.state.gridIndex);
    if (this.configured) {
      return; // listeners survive re-boots; only the bounds needed refreshing
    }
    this.configured = true;
    slider.addEventListener("input", () => {
      void this.select(Number(slider.value));
    });

    const colorBy = byId<HTMLSelectElement>("color-by");
    colorBy.replaceChildren();
    const none = this.root.createElement("option");
    none.value = "";
    none.textContent = "(none)";
    colorBy.appendChild(none);
    for (const column of meta.metadata_columns) {
      const opt = this.root.createElement("option");
      opt.value = column;
      opt.textContent = column;
      colorBy.appendChild(opt);
    }
    colorBy.disabled = meta.metadata_columns.length === 0;
    colorBy.addEventListener("change", () => {
      this.state.colorBy = colorBy.value === "" ? null : colorBy.value;
      this.renderCurrent();
    });

    for (const [selectId, position] of [
      ["axis-i", 0],
      ["axis-j", 1],
    ] as [string, number][]) {
      const select = byId<HTMLSelectElement>(selectId);
      select.replaceChildren();
      for (let axis = 0; axis < meta.k; axis += 1) {
        const opt = this.root.createElement("option");
        opt.value = String(axis);
        opt.textContent = `axis ${axis + 1}`;
        select.appendChild(opt);
      }
      select.value = String(this.state.axisPair[position]);
      select.disabled = meta.k <= 2; // nothing to choose with two axes
      select.addEventListener("change", () => {
        this.state.axisPair[position] = Number(select.value);
        this.renderCurrent();
      });
    }

    const panel = byId<HTMLSelectElement>("panel-mode");
    panel.value = this.state.panel;
    panel.addEventListener("change", () => {
      this.state.panel = panel.value as PanelMode;
      this.renderCurrent();
    });
  }

  // -- rendering ------------------------------------------------------------

  async select(index: number): Promise<void> {
    if (!this.meta) {
      return;
    }
    this.state.gridIndex = Math.max(0, Math.min(index, this.meta.r_values.length - 1));
    const seq = ++this.renderSeq;
    let entry: GridEntry;
    try {
      entry = await this.client.ordination(this.state.gridIndex);
    } catch (err) {
      this.showBanner(`fetch failed, showing the previous view: ${err}`, false);
      return;
    }
    if (seq !== this.renderSeq) {
      return; // a newer slider position superseded this fetch
    }
    this.hideBanner();
    this.renderEntry(entry);
  }

  private renderCurrent(): void {
    const entry = this.client.cached(this.state.gridIndex);
    if (entry) {
      this.renderEntry(entry);
    }
  }

  private renderEntry(entry: GridEntry): void {
    byId<HTMLElement>("r-label").textContent = rLabel(entry.r);

    const samplesHost = byId<HTMLElement>("samples-panel");
    const variablesHost = byId<HTMLElement>("variables-panel");
    const showSamples = this.state.panel !== "variables";
    const showVariables = this.state.panel !== "samples";
    samplesHost.hidden = !showSamples;
    variablesHost.hidden = !showVariables;

    if (showSamples) {
      const colorKeys = this.state.colorBy
        ? entry.samples.map((s) => {
            const value = s.metadata?.[this.state.colorBy as string];
            return value === undefined || value === null ? null : String(value);
          })
        : undefined;
      renderScatter(samplesHost, {
        title: "samples",
        coords: entry.samples.map((s) => s.coords),
        axisPair: this.state.axisPair,
        varianceFractions: entry.variance_fractions,
        colorKeys,
        pointClass: "sample-point",
      });
      const legend = byId<HTMLElement>("legend");
      if (colorKeys) {
        renderLegend(legend, colorKeys);
      } else {
        legend.replaceChildren();
      }
    }

    if (showVariables) {
      renderScatter(variablesHost, {
        title: "variables",
        coords: entry.variables.map((v) => v.coords),
        axisPair: this.state.axisPair,
        varianceFractions: entry.variance_fractions,
        pointClass: "variable-point",
      });
    }

    const badge = byId<HTMLElement>("downsample-badge");
    if (this.meta && entry.variables.length < this.meta.p) {
      badge.hidden = false;
      badge.textContent = `showing top ${entry.variables.length} of ${this.meta.p} variables`;
    } else {
      badge.hidden = true;
      badge.textContent = "";
    }

    this.profile.render(entry.r);
  }

  // -- status ---------------------------------------------------------------

  private showBanner(message: string, showRetry: boolean): void {
    const banner = byId<HTMLElement>("status-banner");
    banner.hidden = false;
    byId<HTMLElement>("status-message").textContent = message;
    byId<HTMLButtonElement>("retry-button").hidden = !showRetry;
  }

  private hideBanner(): void {
    byId<HTMLElement>("status-banner").hidden = true;
  }
}

export function boot(base = ""): ExplorerApp {
  const app = new ExplorerApp(new GridClient(base));
  void app.start();
  return app;
}

declare global {
  interface Window {
    explorer?: ExplorerApp;
  }
}

if (typeof window !== "undefined" && document.getElementById("r-slider") && !window.explorer) {
  window.explorer = boot();
}
