// Scenario form state and its two serial forms: the service request body
// and the shareable URL fragment. Both mappings are total and reversible so
// a restored fragment reproduces the identical request.

import type { WhatIfRequest } from "./types.js";

export interface ScenarioForm {
  /** Intervention series name; the wire schema also accepts an index. */
  intervention: string;
  r: number;
  changepoint: number;
  nSims: number;
  seed: number;
}

export const DEFAULT_FORM: ScenarioForm = {
  intervention: "",
  r: 0.5,
  changepoint: 1,
  nSims: 50,
  seed: 0,
};

const clamp = (v: number, lo: number, hi: number) =>
  Math.min(hi, Math.max(lo, v));

/**
 * Coerce a form into the ranges the service accepts: r in [-1, 1],
 * changepoint in 1..T-1 (when T is known), n_sims >= 1. Non-finite numbers
 * fall back to the defaults.
 */
export function sanitizeForm(form: ScenarioForm, T?: number): ScenarioForm {
  const num = (v: number, fallback: number) =>
    Number.isFinite(v) ? v : fallback;
  // rounding and range inputs can hand back -0, which stringifies as "0"
  // and would decode as +0, breaking exact round trips
  const unsign = (v: number) => (v === 0 ? 0 : v);
  const maxChange = T === undefined ? Infinity : Math.max(1, T - 1);
  return {
    intervention: form.intervention,
    r: unsign(clamp(num(form.r, DEFAULT_FORM.r), -1, 1)),
    changepoint: clamp(
      Math.round(num(form.changepoint, DEFAULT_FORM.changepoint)),
      1,
      maxChange,
    ),
    nSims: Math.max(1, Math.round(num(form.nSims, DEFAULT_FORM.nSims))),
    seed: unsign(Math.round(num(form.seed, DEFAULT_FORM.seed))),
  };
}

/** The exact POST /whatif body for a form (wait is a transport flag, not state). */
export function toRequest(form: ScenarioForm): WhatIfRequest {
  return {
    intervention: form.intervention,
    r: form.r,
    changepoint: form.changepoint,
    n_sims: form.nSims,
    seed: form.seed,
  };
}

/**
 * Canonical identity of a request: sorted keys, compact JSON. Two forms
 * with the same key submit the same scenario, so the client can reuse the
 * card the service already answered.
 */
export function requestKey(req: WhatIfRequest): string {
  const fields: Record<string, unknown> = {
    intervention: req.intervention,
    r: req.r,
    changepoint: req.changepoint,
    n_sims: req.n_sims,
    seed: req.seed,
  };
  const parts = Object.keys(fields)
    .sort()
    .map((k) => `${JSON.stringify(k)}:${JSON.stringify(fields[k])}`);
  return `{${parts.join(",")}}`;
}

// Fragment grammar: #k=<name>&r=<num>&cp=<int>&n=<int>&s=<int>
// encodeURIComponent guards the free-text intervention name.

export function encodeFragment(form: ScenarioForm): string {
  return [
    `k=${encodeURIComponent(form.intervention)}`,
    `r=${form.r}`,
    `cp=${form.changepoint}`,
    `n=${form.nSims}`,
    `s=${form.seed}`,
  ].join("&");
}

/** Parse a fragment (with or without leading '#'); null if it is not ours. */
export function decodeFragment(fragment: string): ScenarioForm | null {
  const raw = fragment.startsWith("#") ? fragment.slice(1) : fragment;
  if (!raw) return null;
  const fields = new Map<string, string>();
  for (const part of raw.split("&")) {
    const eq = part.indexOf("=");
    if (eq < 0) return null;
    fields.set(part.slice(0, eq), part.slice(eq + 1));
  }
  const need = ["k", "r", "cp", "n", "s"];
  if (fields.size !== need.length || need.some((k) => !fields.has(k))) {
    return null;
  }
  const nums = {
    r: Number(fields.get("r")),
    changepoint: Number(fields.get("cp")),
    nSims: Number(fields.get("n")),
    seed: Number(fields.get("s")),
  };
  if (Object.values(nums).some((v) => !Number.isFinite(v))) return null;
  return { intervention: decodeURIComponent(fields.get("k")!), ...nums };
}

/**
 * Tokens for discarding superseded in-flight runs: only the most recently
 * begun run may render its progress or outcome.
 */
export class RunTracker {
  private token = 0;

  begin(): number {
    return ++this.token;
  }

  isCurrent(token: number): boolean {
    return token === this.token;
  }
}
