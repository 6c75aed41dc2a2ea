import { describe, expect, it } from "vitest";

import {
  DEFAULT_FORM,
  RunTracker,
  decodeFragment,
  encodeFragment,
  requestKey,
  sanitizeForm,
  toRequest,
  type ScenarioForm,
} from "../src/scenario";

// deterministic LCG so the round-trip sweep is reproducible
function lcg(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 2 ** 32;
  };
}

describe("request mapping", () => {
  it("uses the exact wire field names", () => {
    const form: ScenarioForm = {
      intervention: "drift",
      r: -0.25,
      changepoint: 40,
      nSims: 80,
      seed: 3,
    };
    expect(toRequest(form)).toEqual({
      intervention: "drift",
      r: -0.25,
      changepoint: 40,
      n_sims: 80,
      seed: 3,
    });
  });

  it("request key ignores field order and wait flag", () => {
    const a = requestKey({
      intervention: "pulse", r: 0.5, changepoint: 10, n_sims: 50, seed: 0,
    });
    const b = requestKey({
      seed: 0, n_sims: 50, changepoint: 10, r: 0.5, intervention: "pulse",
      wait: false,
    });
    expect(a).toBe(b);
    const c = requestKey({
      intervention: "pulse", r: 0.5, changepoint: 10, n_sims: 50, seed: 1,
    });
    expect(a).not.toBe(c);
  });
});

describe("fragment round trip", () => {
  it("restores the identical request for many random forms", () => {
    const rand = lcg(42);
    for (let trial = 0; trial < 200; trial++) {
      // the app only ever encodes sanitized state, so the property is
      // quantified over sanitizeForm's image (this also folds away -0)
      const form: ScenarioForm = sanitizeForm({
        intervention: ["drift", "pulse", "camp aign&x", "sér=ie"][
          Math.floor(rand() * 4)
        ],
        r: Math.round((rand() * 2 - 1) * 100) / 100,
        changepoint: 1 + Math.floor(rand() * 299),
        nSims: 1 + Math.floor(rand() * 500),
        seed: Math.floor(rand() * 10000),
      });
      const restored = decodeFragment(`#${encodeFragment(form)}`);
      expect(restored).not.toBeNull();
      expect(toRequest(restored!)).toEqual(toRequest(form));
    }
  });

  it("accepts fragments with or without the leading hash", () => {
    const frag = encodeFragment(DEFAULT_FORM);
    expect(decodeFragment(frag)).toEqual(decodeFragment(`#${frag}`));
  });

  it("rejects foreign or truncated fragments", () => {
    expect(decodeFragment("")).toBeNull();
    expect(decodeFragment("#")).toBeNull();
    expect(decodeFragment("#section-3")).toBeNull();
    expect(decodeFragment("#k=drift&r=0.5")).toBeNull();
    expect(decodeFragment("#k=drift&r=abc&cp=10&n=50&s=0")).toBeNull();
    expect(decodeFragment("#k=drift&r=0.5&cp=10&n=50&s=0&extra=1")).toBeNull();
  });
});

describe("sanitizeForm", () => {
  it("clamps r to the slider range and changepoint to 1..T-1", () => {
    const wild: ScenarioForm = {
      intervention: "drift", r: 3.5, changepoint: 999, nSims: 0, seed: 1.7,
    };
    expect(sanitizeForm(wild, 100)).toEqual({
      intervention: "drift", r: 1, changepoint: 99, nSims: 1, seed: 2,
    });
    expect(sanitizeForm({ ...wild, r: -9, changepoint: -5 }, 100)).toMatchObject({
      r: -1,
      changepoint: 1,
    });
  });

  it("replaces non-finite values with defaults", () => {
    const broken: ScenarioForm = {
      intervention: "drift", r: NaN, changepoint: Infinity, nSims: NaN, seed: NaN,
    };
    const fixed = sanitizeForm(broken, 50);
    expect(fixed.r).toBe(DEFAULT_FORM.r);
    expect(fixed.changepoint).toBe(1);
    expect(fixed.nSims).toBe(DEFAULT_FORM.nSims);
    expect(fixed.seed).toBe(DEFAULT_FORM.seed);
  });

  it("leaves an in-range form untouched", () => {
    const ok: ScenarioForm = {
      intervention: "pulse", r: -0.35, changepoint: 20, nSims: 50, seed: 4,
    };
    expect(sanitizeForm(ok, 60)).toEqual(ok);
  });
});

describe("RunTracker", () => {
  it("only the latest token is current", () => {
    const tracker = new RunTracker();
    const first = tracker.begin();
    expect(tracker.isCurrent(first)).toBe(true);
    const second = tracker.begin();
    expect(tracker.isCurrent(first)).toBe(false);
    expect(tracker.isCurrent(second)).toBe(true);
  });
});
