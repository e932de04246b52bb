// Application state and the actions behind the UI. Every number shown in a
// view comes from a field the service returned; this module only arranges
// them. Corrections are re-fetched after each mutation so the pending list
// always mirrors the server.

import { Client } from "./api.js";
import {
  ApiError, Correction, ParamMap, RepairReport, RsmInfo, TraceElement,
} from "./types.js";
import { replayStates } from "./timeline.js";

export interface AppState {
  rsm: RsmInfo | null;
  trace: TraceElement[];
  params: ParamMap;                // the accepted map loaded in the session
  corrections: Correction[];
  selected: number | undefined;    // selected timestep
  lastReport: RepairReport | null;
  recordedStrip: string[];         // states as logged
  replayStrip: string[] | null;    // states replayed under the report params
  repairing: boolean;              // one in-flight repair at a time
  toast: string | null;
}

export class AppModel {
  state: AppState = {
    rsm: null,
    trace: [],
    params: {},
    corrections: [],
    selected: undefined,
    lastReport: null,
    recordedStrip: [],
    replayStrip: null,
    repairing: false,
    toast: null,
  };

  private listeners: (() => void)[] = [];

  constructor(readonly client: Client) {}

  onChange(fn: () => void) {
    this.listeners.push(fn);
  }

  private notify() {
    for (const fn of this.listeners) fn();
  }

  private fail(e: unknown) {
    // 4xx bodies surface verbatim
    this.state.toast = e instanceof ApiError ? e.body : String(e);
    this.notify();
  }

  async load(): Promise<void> {
    this.state.rsm = await this.client.rsm();
    this.state.trace = await this.client.trace();
    this.state.params = await this.client.params();
    this.state.corrections = await this.client.corrections();
    this.state.recordedStrip = this.state.trace.map((e) => e.state);
    this.state.replayStrip = null;
    this.state.lastReport = null;
    this.notify();
  }

  select(t: number) {
    if (t >= 0 && t < this.state.trace.length) {
      this.state.selected = t;
      this.notify();
    }
  }

  async addCorrection(expected: string): Promise<void> {
    if (this.state.selected === undefined) return;
    try {
      await this.client.addCorrection({ t: this.state.selected, expected });
      this.state.corrections = await this.client.corrections();
      this.state.toast = null;
    } catch (e) {
      return this.fail(e);
    }
    this.notify();
  }

  async removeCorrection(index: number): Promise<void> {
    try {
      await this.client.removeCorrection(index);
      this.state.corrections = await this.client.corrections();
    } catch (e) {
      return this.fail(e);
    }
    this.notify();
  }

  async runRepair(penalty: number, epsilon: number): Promise<void> {
    if (this.state.repairing) return;
    this.state.repairing = true;
    this.notify();
    try {
      this.state.lastReport = await this.client.repair(penalty, epsilon);
      this.state.replayStrip = null;
      this.state.toast = null;
    } catch (e) {
      this.state.repairing = false;
      return this.fail(e);
    }
    this.state.repairing = false;
    this.notify();
  }

  // replay the trace under the repaired parameter map from the last report
  async compareReplay(): Promise<void> {
    const report = this.state.lastReport;
    if (!report) return;
    try {
      const entries = await this.client.replay(report.params);
      this.state.replayStrip = replayStates(entries);
    } catch (e) {
      return this.fail(e);
    }
    this.notify();
  }

  async acceptRepairedParams(): Promise<void> {
    const report = this.state.lastReport;
    if (!report) return;
    try {
      this.state.params = await this.client.acceptParams(report.params);
    } catch (e) {
      return this.fail(e);
    }
    this.notify();
  }

  paramsBeforeAfter(): { name: string; before: number; after: number | null }[] {
    const report = this.state.lastReport;
    return Object.entries(this.state.params).map(([name, before]) => ({
      name,
      before,
      after: report ? report.params[name] ?? null : null,
    }));
  }
}
