// Wire types of the repair service JSON API.

export type Vec2 = [number, number];
export type TraceValue = number | Vec2;

export interface TraceElement {
  t: number;
  state: string;
  in: Record<string, TraceValue>;
  var: Record<string, TraceValue>;
}

export interface RsmInfo {
  source: string;
  states: string[];
  start: string;
  end: string;
}

export interface Correction {
  t: number;
  expected: string;
}

export type ParamMap = Record<string, number>;

export interface RepairReport {
  deltas: Record<string, number>;
  satisfied: boolean[];
  objective: number;
  solver_ms: number;
  params: ParamMap;
}

export interface ReplayEntry {
  t: number;
  state: string;
}

export class ApiError extends Error {
  constructor(public status: number, public body: string) {
    super(`HTTP ${status}: ${body}`);
  }
}
