// End-to-end explorer behavior against a served 11-point grid, driven
// through the DOM the way a user would drive it.

import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { ExplorerApp } from "../src/main";
import { GridClient } from "../src/api";
import { rLabel } from "../src/labels";
import { FetchMock, buildMeta, flush, installFetchMock, loadFixture, mountPage } from "./harness";

const doc = loadFixture("grid.json");
const thinned = loadFixture("grid_thinned.json");

let mock: FetchMock;

function bootApp(): ExplorerApp {
  return new ExplorerApp(new GridClient(""));
}

async function startApp(): Promise<ExplorerApp> {
  const app = bootApp();
  await app.start();
  await flush();
  return app;
}

function slider(): HTMLInputElement {
  return document.getElementById("r-slider") as HTMLInputElement;
}

function dragTo(index: number): void {
  const el = slider();
  el.value = String(index);
  el.dispatchEvent(new Event("input", { bubbles: true }));
}

function samplePoints(): number {
  return document.querySelectorAll("#samples-panel circle.sample-point").length;
}

function variablePoints(): number {
  return document.querySelectorAll("#variables-panel circle.variable-point").length;
}

beforeEach(() => {
  mountPage();
  mock = installFetchMock(doc);
});

afterEach(() => {
  mock.restore();
});

describe("slider drag end to end", () => {
  it("renders every stop with the right label and point counts, GET-only", async () => {
    await startApp();
    expect(doc.grid.length).toBe(11);

    for (let index = 0; index < doc.grid.length; index += 1) {
      dragTo(index);
      await flush();
      const entry = doc.grid[index];
      expect(document.getElementById("r-label")!.textContent).toBe(rLabel(entry.r));
      expect(samplePoints()).toBe(entry.samples.length);
      expect(variablePoints()).toBe(entry.variables.length);
    }

    // endpoint stops name the analyses they reduce to
    dragTo(0);
    await flush();
    expect(document.getElementById("r-label")!.textContent).toBe("r = 0 (DPCoA metric)");
    dragTo(10);
    await flush();
    expect(document.getElementById("r-label")!.textContent).toBe("r = 1 (PCA)");

    // strictly read-only: every request the app made was a GET
    expect(mock.requests.length).toBeGreaterThan(0);
    expect(mock.requests.every((r) => r.method === "GET")).toBe(true);
  });

  it("fetches each ordination once: one step, at most one fetch", async () => {
    await startApp();
    expect(mock.ordinationFetches).toEqual([0]);
    for (let index = 1; index <= 10; index += 1) {
      const before = mock.ordinationFetches.length;
      dragTo(index);
      await flush();
      expect(mock.ordinationFetches.length - before).toBeLessThanOrEqual(1);
    }
    // dragging back is served fully from the cache
    const total = mock.ordinationFetches.length;
    for (let index = 9; index >= 0; index -= 1) {
      dragTo(index);
      await flush();
    }
    expect(mock.ordinationFetches.length).toBe(total);
    expect(new Set(mock.ordinationFetches).size).toBe(mock.ordinationFetches.length);
  });

  it("a newer slider position supersedes a stale in-flight fetch", async () => {
    const app = await startApp();
    const release = mock.delayIndex(5);
    dragTo(5);
    await flush(1);
    dragTo(6);
    await flush();
    expect(document.getElementById("r-label")!.textContent).toBe(rLabel(doc.grid[6].r));
    release();
    await flush();
    // the late response for index 5 must not clobber the newer view
    expect(document.getElementById("r-label")!.textContent).toBe(rLabel(doc.grid[6].r));
    expect(app.state.gridIndex).toBe(6);
  });
});

describe("controls from meta", () => {
  it("slider gets one stop per grid entry", async () => {
    await startApp();
    expect(slider().min).toBe("0");
    expect(slider().max).toBe("10");
  });

  it("metadata columns populate the color control", async () => {
    await startApp();
    const select = document.getElementById("color-by") as HTMLSelectElement;
    const values = Array.from(select.options).map((o) => o.value);
    expect(values).toEqual(["", "day", "group"]);
    expect(select.disabled).toBe(false);
  });

  it("axis selectors are fixed when k = 2", async () => {
    await startApp();
    expect((document.getElementById("axis-i") as HTMLSelectElement).disabled).toBe(true);
    expect((document.getElementById("axis-j") as HTMLSelectElement).disabled).toBe(true);
  });

  it("coloring by metadata draws a legend without changing counts", async () => {
    await startApp();
    const select = document.getElementById("color-by") as HTMLSelectElement;
    select.value = "group";
    select.dispatchEvent(new Event("change", { bubbles: true }));
    await flush();
    expect(document.querySelectorAll("#legend .legend-item").length).toBe(2);
    expect(samplePoints()).toBe(doc.grid[0].samples.length);
  });

  it("panel mode hides the other panel", async () => {
    await startApp();
    const select = document.getElementById("panel-mode") as HTMLSelectElement;
    select.value = "samples";
    select.dispatchEvent(new Event("change", { bubbles: true }));
    await flush();
    expect((document.getElementById("variables-panel") as HTMLElement).hidden).toBe(true);
    expect((document.getElementById("samples-panel") as HTMLElement).hidden).toBe(false);
  });
});

describe("profile strip", () => {
  it("shows the trace with a marker at the selected optimum", async () => {
    await startApp();
    const strip = document.getElementById("profile-strip") as HTMLElement;
    expect(strip.hidden).toBe(false);
    expect(strip.querySelectorAll(".profile-line").length).toBe(1);
    expect(strip.querySelectorAll(".profile-optimum").length).toBe(1);
    expect(strip.querySelectorAll(".profile-cursor").length).toBe(1);
  });

  it("hover targets report the exact trace values", async () => {
    await startApp();
    const hovers = document.querySelectorAll("#profile-strip .profile-hover title");
    expect(hovers.length).toBe(doc.profile_trace.length);
    const [r0, ll0] = doc.profile_trace[0];
    expect(hovers[0].textContent).toBe(`r = ${r0}, log-likelihood = ${ll0}`);
  });

  it("stays hidden for fixed-r documents without a profile", async () => {
    mock.restore();
    const noProfile = { ...doc, profile_trace: null };
    mock = installFetchMock(noProfile);
    await startApp();
    expect((document.getElementById("profile-strip") as HTMLElement).hidden).toBe(true);
  });
});

describe("degraded modes", () => {
  it("meta failure shows the banner and retry recovers", async () => {
    mock.restore();
    mock = installFetchMock(doc, { failMeta: true });
    await startApp();
    const banner = document.getElementById("status-banner") as HTMLElement;
    expect(banner.hidden).toBe(false);
    expect((document.getElementById("retry-button") as HTMLElement).hidden).toBe(false);
    (document.getElementById("retry-button") as HTMLButtonElement).click();
    await flush(8);
    expect(banner.hidden).toBe(true);
    expect(samplePoints()).toBe(doc.grid[0].samples.length);
  });

  it("thinned grids surface the downsampling badge", async () => {
    mock.restore();
    mock = installFetchMock(thinned);
    await startApp();
    const badge = document.getElementById("downsample-badge") as HTMLElement;
    expect(badge.hidden).toBe(false);
    expect(badge.textContent).toContain(`top ${thinned.grid[0].variables.length}`);
    expect(badge.textContent).toContain(`of ${thinned.variables.length}`);
    expect(variablePoints()).toBe(thinned.grid[0].variables.length);
  });
});

describe("meta mirror", () => {
  it("fixture meta matches the served shape", () => {
    const meta = buildMeta(doc);
    expect(meta.r_values.length).toBe(11);
    expect(meta.k).toBe(2);
    expect(meta.n).toBe(doc.samples.length);
    expect(meta.p).toBe(doc.variables.length);
  });
});
