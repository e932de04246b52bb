// State timeline: contiguous runs of equal states render as one colored
// segment; a second strip shows replayed states with differences flagged.

import { ReplayEntry } from "./types.js";

export interface Segment {
  state: string;
  from: number; // first timestep of the run
  to: number;   // last timestep of the run (inclusive)
}

export function segments(states: string[]): Segment[] {
  const out: Segment[] = [];
  for (let t = 0; t < states.length; t++) {
    const state = states[t]!;
    const last = out[out.length - 1];
    if (last && last.state === state) {
      last.to = t;
    } else {
      out.push({ state, from: t, to: t });
    }
  }
  return out;
}

// indices where the two strips disagree (compared over the shared prefix)
export function diffIndices(a: string[], b: string[]): number[] {
  const n = Math.min(a.length, b.length);
  const out: number[] = [];
  for (let t = 0; t < n; t++) {
    if (a[t] !== b[t]) out.push(t);
  }
  return out;
}

// the timestep whose transition first entered `state`, or null
export function stateEnteredAt(strip: string[], state: string): number | null {
  for (let t = 0; t + 1 < strip.length; t++) {
    if (strip[t] !== state && strip[t + 1] === state) return t;
  }
  return null;
}

export function replayStates(entries: ReplayEntry[]): string[] {
  return entries.map((e) => e.state);
}

const PALETTE = ["#4c78a8", "#f58518", "#54a24b", "#e45756", "#72b7b2",
                 "#b279a2", "#eeca3b", "#9d755d"];

export function stateColor(state: string, states: string[]): string {
  const i = Math.max(0, states.indexOf(state));
  return PALETTE[i % PALETTE.length]!;
}

export interface StripOptions {
  states: string[];       // declared state set, for stable colors
  selected?: number;      // highlighted timestep
  diffs?: Set<number>;    // timesteps to flag
  cssClass: string;
}

// one strip as an HTML string; interaction is wired via data-t attributes
export function renderStrip(strip: string[], opts: StripOptions): string {
  if (strip.length === 0) {
    return `<div class="strip ${opts.cssClass} empty">no trace loaded</div>`;
  }
  const segs = segments(strip);
  const total = strip.length;
  const parts: string[] = [];
  for (const seg of segs) {
    const width = ((seg.to - seg.from + 1) / total) * 100;
    const color = stateColor(seg.state, opts.states);
    const hasSel = opts.selected !== undefined
      && seg.from <= opts.selected && opts.selected <= seg.to;
    const hasDiff = opts.diffs
      && [...opts.diffs].some((t) => seg.from <= t && t <= seg.to);
    const cls = ["segment", hasSel ? "selected" : "", hasDiff ? "diff" : ""]
      .filter(Boolean).join(" ");
    parts.push(
      `<div class="${cls}" data-from="${seg.from}" data-to="${seg.to}" `
      + `style="width:${width}%;background:${color}" `
      + `title="${seg.state} t=${seg.from}..${seg.to}">`
      + `<span>${seg.state}</span></div>`);
  }
  return `<div class="strip ${opts.cssClass}">${parts.join("")}</div>`;
}
