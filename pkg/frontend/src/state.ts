// View state for the explorer. Axis indices are 0-based internally and
// rendered 1-based; the default pair is the first two axes.

export type PanelMode = "samples" | "variables" | "both";

export interface ViewState {
  gridIndex: number;
  axisPair: [number, number];
  colorBy: string | null;
  panel: PanelMode;
}

export function initialState(): ViewState {
  return { gridIndex: 0, axisPair: [0, 1], colorBy: null, panel: "both" };
}

export function clampState(state: ViewState, gridLength: number, k: number): ViewState {
  const clamp = (v: number, hi: number) => Math.max(0, Math.min(v, hi));
  const [i, j] = state.axisPair;
  return {
    ...state,
    gridIndex: clamp(state.gridIndex, gridLength - 1),
    axisPair: [clamp(i, k - 1), clamp(j, k - 1)],
  };
}
