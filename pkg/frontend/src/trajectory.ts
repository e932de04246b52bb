// 2D trajectory view: robot and ball paths drawn from trace inputs, with
// the selected timestep highlighted. The input names are a configurable
// mapping so non-soccer machines can remap or hide the view.

import { TraceElement, Vec2 } from "./types.js";

export interface TrajectoryConfig {
  robotInput: string;
  ballInput: string;
}

export const DEFAULT_TRAJECTORY: TrajectoryConfig = {
  robotInput: "robotLoc",
  ballInput: "ballLoc",
};

function isVec(v: unknown): v is Vec2 {
  return Array.isArray(v) && v.length === 2
    && typeof v[0] === "number" && typeof v[1] === "number";
}

export function extractPath(trace: TraceElement[], input: string): Vec2[] {
  const out: Vec2[] = [];
  for (const elem of trace) {
    const v = elem.in[input];
    if (!isVec(v)) return [];
    out.push(v);
  }
  return out;
}

export function hasTrajectory(trace: TraceElement[], cfg: TrajectoryConfig): boolean {
  return trace.length > 0
    && extractPath(trace, cfg.robotInput).length === trace.length
    && extractPath(trace, cfg.ballInput).length === trace.length;
}

interface Box { minX: number; minY: number; maxX: number; maxY: number; }

function bounds(paths: Vec2[][]): Box {
  let minX = Infinity, minY = Infinity, maxX = -Infinity, maxY = -Infinity;
  for (const path of paths) {
    for (const [x, y] of path) {
      minX = Math.min(minX, x); maxX = Math.max(maxX, x);
      minY = Math.min(minY, y); maxY = Math.max(maxY, y);
    }
  }
  const pad = Math.max(maxX - minX, maxY - minY, 1) * 0.08;
  return { minX: minX - pad, minY: minY - pad, maxX: maxX + pad, maxY: maxY + pad };
}

function project(box: Box, w: number, h: number) {
  const sx = w / (box.maxX - box.minX);
  const sy = h / (box.maxY - box.minY);
  const s = Math.min(sx, sy);
  // screen y grows downward
  return ([x, y]: Vec2): Vec2 =>
    [(x - box.minX) * s, h - (y - box.minY) * s];
}

function polyline(points: Vec2[], cls: string): string {
  const pts = points.map(([x, y]) => `${x.toFixed(1)},${y.toFixed(1)}`).join(" ");
  return `<polyline class="${cls}" points="${pts}" fill="none"/>`;
}

export function renderTrajectory(trace: TraceElement[], cfg: TrajectoryConfig,
                                 selected: number | undefined,
                                 w = 420, h = 300): string {
  const robot = extractPath(trace, cfg.robotInput);
  const ball = extractPath(trace, cfg.ballInput);
  if (robot.length === 0 || ball.length === 0) {
    return `<div class="trajectory empty">no positional inputs to draw</div>`;
  }
  const proj = project(bounds([robot, ball]), w, h);
  const parts = [
    polyline(robot.map(proj), "robot-path"),
    polyline(ball.map(proj), "ball-path"),
  ];
  if (selected !== undefined && selected < trace.length) {
    const [rx, ry] = proj(robot[selected]!);
    const [bx, by] = proj(ball[selected]!);
    parts.push(`<circle class="robot-mark" cx="${rx.toFixed(1)}" cy="${ry.toFixed(1)}" r="6"/>`);
    parts.push(`<circle class="ball-mark" cx="${bx.toFixed(1)}" cy="${by.toFixed(1)}" r="4"/>`);
  }
  return `<svg class="trajectory" viewBox="0 0 ${w} ${h}" width="${w}" height="${h}">`
    + parts.join("") + `</svg>`;
}
