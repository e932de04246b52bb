// Typed client over the service endpoints. The UI never computes repair
// results itself; everything displayed comes back from these calls.

import {
  ApiError, Correction, ParamMap, RepairReport, ReplayEntry, RsmInfo,
  TraceElement,
} from "./types.js";

async function call<T>(base: string, method: string, path: string,
                       body?: unknown): Promise<T> {
  const resp = await fetch(base + path, {
    method,
    headers: body !== undefined ? { "Content-Type": "application/json" } : {},
    body: body !== undefined ? JSON.stringify(body) : undefined,
  });
  const text = await resp.text();
  if (!resp.ok) {
    throw new ApiError(resp.status, text.trim());
  }
  return JSON.parse(text) as T;
}

export class Client {
  constructor(readonly base: string) {}

  rsm(): Promise<RsmInfo> {
    return call(this.base, "GET", "/api/rsm");
  }

  trace(from?: number, to?: number): Promise<TraceElement[]> {
    let path = "/api/trace";
    if (from !== undefined && to !== undefined) {
      path += `?from=${from}&to=${to}`;
    }
    return call(this.base, "GET", path);
  }

  params(): Promise<ParamMap> {
    return call(this.base, "GET", "/api/params");
  }

  corrections(): Promise<Correction[]> {
    return call(this.base, "GET", "/api/corrections");
  }

  addCorrection(c: Correction): Promise<{ count: number }> {
    return call(this.base, "POST", "/api/corrections", c);
  }

  removeCorrection(index: number): Promise<{ count: number }> {
    return call(this.base, "DELETE", `/api/corrections/${index}`);
  }

  repair(penalty: number, epsilon: number): Promise<RepairReport> {
    return call(this.base, "POST", "/api/repair", { penalty, epsilon });
  }

  replay(params: ParamMap): Promise<ReplayEntry[]> {
    return call<{ states: ReplayEntry[] }>(this.base, "POST", "/api/replay", { params })
      .then((r) => r.states);
  }

  acceptParams(params: ParamMap): Promise<ParamMap> {
    return call(this.base, "POST", "/api/params", params);
  }
}
