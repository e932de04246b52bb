// Browser bootstrap: renders the model into the static shell and wires
// events. All rendering goes through innerHTML with data attributes; the
// heavier logic lives in the testable modules.

import { Client } from "./api.js";
import { AppModel } from "./model.js";
import { diffIndices, renderStrip, stateEnteredAt } from "./timeline.js";
import { DEFAULT_TRAJECTORY, hasTrajectory, renderTrajectory } from "./trajectory.js";

const model = new AppModel(new Client(""));

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function fmt(x: number): string {
  return Math.abs(x) >= 1e-3 || x === 0 ? x.toFixed(4) : x.toExponential(2);
}

function render() {
  const s = model.state;
  el("toast").textContent = s.toast ?? "";
  el("toast").style.display = s.toast ? "block" : "none";
  if (!s.rsm) return;

  el("machine-states").innerHTML = s.rsm.states
    .map((st) => `<span class="state-chip">${st}</span>`).join(" ");
  el("source").textContent = s.rsm.source;

  const diffs = s.replayStrip
    ? new Set(diffIndices(s.recordedStrip, s.replayStrip)) : undefined;
  el("recorded-strip").innerHTML = renderStrip(s.recordedStrip, {
    states: s.rsm.states, selected: s.selected, cssClass: "recorded",
  });
  if (s.replayStrip) {
    el("replay-strip").innerHTML = renderStrip(s.replayStrip, {
      states: s.rsm.states, selected: s.selected, diffs, cssClass: "replay",
    });
    const entries = s.rsm.states
      .map((st) => ({ st, at: stateEnteredAt(s.replayStrip!, st) }))
      .filter((e) => e.at !== null && s.recordedStrip[e.at! + 1] !== e.st)
      .map((e) => `${e.st} at t=${e.at}`);
    el("replay-note").textContent = entries.length
      ? `replay enters ${entries.join(", ")}` : "replay matches the recording";
  } else {
    el("replay-strip").innerHTML = "";
    el("replay-note").textContent = "";
  }

  const scrub = el<HTMLInputElement>("scrub");
  scrub.max = String(Math.max(0, s.trace.length - 1));
  if (s.selected !== undefined) scrub.value = String(s.selected);
  el("selected-label").textContent = s.selected === undefined
    ? "no timestep selected"
    : `t = ${s.selected}, recorded state ${s.recordedStrip[s.selected]}`;

  const expected = el<HTMLSelectElement>("expected-state");
  expected.innerHTML = s.rsm.states
    .map((st) => `<option value="${st}">${st}</option>`).join("");

  el("corrections").innerHTML = s.corrections.map((c, i) =>
    `<li>t=${c.t} &rarr; ${c.expected} `
    + `<button data-remove="${i}">remove</button></li>`).join("")
    || "<li class='empty'>none pending</li>";

  el<HTMLButtonElement>("run-repair").disabled = s.repairing;
  el<HTMLButtonElement>("compare-replay").disabled = !s.lastReport;
  el<HTMLButtonElement>("accept-params").disabled = !s.lastReport;

  if (s.lastReport) {
    const r = s.lastReport;
    el("report").innerHTML =
      `<div>objective ${fmt(r.objective)} &middot; solver ${r.solver_ms.toFixed(1)} ms</div>`
      + `<div>satisfied: ${r.satisfied.map((x) => x ? "yes" : "NO").join(", ")}</div>`
      + "<table><tr><th>param</th><th>delta</th></tr>"
      + Object.entries(r.deltas).map(([p, d]) =>
        `<tr><td>${p}</td><td>${fmt(d)}</td></tr>`).join("")
      + "</table>";
  } else {
    el("report").innerHTML = "<span class='empty'>no repair run yet</span>";
  }

  el("params-table").innerHTML =
    "<tr><th>param</th><th>current</th><th>repaired</th></tr>"
    + model.paramsBeforeAfter().map(({ name, before, after }) =>
      `<tr><td>${name}</td><td>${fmt(before)}</td>`
      + `<td>${after === null ? "&mdash;" : fmt(after)}</td></tr>`).join("");

  el("trajectory-box").innerHTML = hasTrajectory(s.trace, DEFAULT_TRAJECTORY)
    ? renderTrajectory(s.trace, DEFAULT_TRAJECTORY, s.selected)
    : "";
}

function wire() {
  for (const id of ["recorded-strip", "replay-strip"]) {
    el(id).addEventListener("click", (ev) => {
      const target = (ev.target as HTMLElement).closest("[data-from]");
      if (target) model.select(Number(target.getAttribute("data-from")));
    });
  }
  el<HTMLInputElement>("scrub").addEventListener("input", (ev) => {
    model.select(Number((ev.target as HTMLInputElement).value));
  });
  el("submit-correction").addEventListener("click", () => {
    void model.addCorrection(el<HTMLSelectElement>("expected-state").value);
  });
  el("corrections").addEventListener("click", (ev) => {
    const idx = (ev.target as HTMLElement).getAttribute("data-remove");
    if (idx !== null) void model.removeCorrection(Number(idx));
  });
  el("run-repair").addEventListener("click", () => {
    const penalty = Number(el<HTMLInputElement>("penalty").value) || 1.0;
    const epsilon = Number(el<HTMLInputElement>("epsilon").value) || 1e-4;
    void model.runRepair(penalty, epsilon).then(() => model.compareReplay());
  });
  el("compare-replay").addEventListener("click", () => void model.compareReplay());
  el("accept-params").addEventListener("click", () => void model.acceptRepairedParams());
}

model.onChange(render);
wire();
void model.load().catch((e) => {
  model.state.toast = String(e);
  render();
});
