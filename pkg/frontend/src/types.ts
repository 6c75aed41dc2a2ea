// Wire types for the model service. Field names and array layouts mirror
// the JSON the endpoints emit; the client never reshapes or rescales them.

/** GET /model */
export interface ModelDoc {
  schema: string;
  tier1: { mu: number[]; alpha: number[][]; theta: number };
  tier2: { gamma: number[][][]; beta: number[][][][]; mu_split: number[][] };
  feature_transform: "raw" | "standardized";
  stats: null | {
    lam_mean: number[][];
    lam_scale: number[][];
    xbar_mean: number[];
    xbar_scale: number[];
  };
  labels: { platforms: string[]; opinions: string[]; interventions: string[] };
}

/** GET /shares?start&end. model/realized are [platform][opinion][bin]. */
export interface SharesDoc {
  start: number;
  end: number;
  platforms: string[];
  opinions: string[];
  model: number[][][];
  realized: (number | null)[][][];
  volume: number[][];
}

/**
 * GET /elasticities?start&end.
 * endogenous_mean[p][q][i][j] is the window-mean elasticity of opinion i's
 * share on platform p to the conditional intensity of opinion j on platform
 * q; intervention_mean[p][i][k] reacts to intervention series k. null marks
 * a cell that was never defined in the window.
 */
export interface ElasticitiesDoc {
  start: number;
  end: number;
  platforms: string[];
  opinions: string[];
  interventions: string[];
  endogenous_mean: (number | null)[][][][];
  endogenous_coverage: number[][][][];
  intervention_mean: (number | null)[][][];
  intervention_coverage: number[][][];
}

/** POST /whatif request body. */
export interface WhatIfRequest {
  intervention: string | number;
  r: number;
  changepoint: number;
  n_sims: number;
  seed: number;
  wait?: boolean;
}

/** Finished scenario document (POST /whatif, GET /whatif/{id}, SSE result). */
export interface WhatIfDoc {
  id: string;
  status: "done";
  scenario: {
    k: number;
    r: number;
    changepoint: number;
    n_sims: number;
    seed: number;
    intervention: string;
  };
  platforms: string[];
  opinions: string[];
  share_percent_change: (number | null)[][];
  share_change_low: (number | null)[][];
  share_change_high: (number | null)[][];
  volume_percent_change: (number | null)[];
  baseline_share: number[][];
  treated_share: number[][];
  baseline_volume: number[];
  treated_volume: number[];
}

export interface WhatIfAccepted {
  id: string;
  status: "accepted";
}

/** One frame from the /whatif/{id}/events stream. */
export type ScenarioEvent =
  | { event: "progress"; data: { id: string; status: string } }
  | { event: "result"; data: WhatIfDoc }
  | { event: "error"; data: { error: string; bin?: number; value?: number } };
