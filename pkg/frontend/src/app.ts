// Dashboard shell: wires the service client, the scenario form, and the
// chart builders to the DOM. All numbers on screen come from service
// payloads; this file only lays them out.

import { ServiceClient, ServiceError } from "./api.js";
import {
  changeBarsSvg,
  escapeXml,
  heatmapSvg,
  sparklineSvg,
  stackedAreaSvg,
} from "./charts.js";
import {
  DEFAULT_FORM,
  RunTracker,
  decodeFragment,
  encodeFragment,
  requestKey,
  sanitizeForm,
  toRequest,
  type ScenarioForm,
} from "./scenario.js";
import type {
  ElasticitiesDoc,
  ModelDoc,
  SharesDoc,
  WhatIfDoc,
} from "./types.js";

interface Docs {
  model: ModelDoc;
  shares: SharesDoc;
  elasticities: ElasticitiesDoc;
}

interface Card {
  doc: WhatIfDoc;
  pinnedAt: number;
}

const RETRY_MS = 5000;

export class Dashboard {
  private form: ScenarioForm = { ...DEFAULT_FORM };
  private docs: Docs | null = null;
  private tracker = new RunTracker();
  private cards = new Map<string, Card>();
  private byRequest = new Map<string, string>();
  private overlayRealized = false;
  private retryTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ServiceClient,
  ) {}

  async start(): Promise<void> {
    const restored = decodeFragment(window.location.hash);
    if (restored !== null) this.form = restored;
    window.addEventListener("hashchange", () => {
      const next = decodeFragment(window.location.hash);
      if (next !== null) {
        this.form = this.docs
          ? sanitizeForm(next, this.binCount())
          : next;
        this.renderForm();
      }
    });
    await this.reload();
  }

  private binCount(): number {
    return this.docs ? this.docs.shares.end : 0;
  }

  async reload(): Promise<void> {
    if (this.retryTimer !== null) {
      clearTimeout(this.retryTimer);
      this.retryTimer = null;
    }
    try {
      const [model, shares, elasticities] = await Promise.all([
        this.client.getModel(),
        this.client.getShares(),
        this.client.getElasticities(),
      ]);
      this.docs = { model, shares, elasticities };
      if (!this.form.intervention) {
        this.form.intervention = model.labels.interventions[0] ?? "";
      }
      this.form = sanitizeForm(this.form, this.binCount());
      this.renderConnected();
    } catch (err) {
      // stale charts are worse than none: drop everything and offer retry
      this.docs = null;
      this.renderDisconnected(err);
      this.retryTimer = setTimeout(() => void this.reload(), RETRY_MS);
    }
  }

  private renderDisconnected(err: unknown): void {
    const message = err instanceof Error ? err.message : String(err);
    this.root.innerHTML = `
      <div class="reconnect">
        <h1>attention market explorer</h1>
        <p class="reconnect-state">service unreachable</p>
        <p class="reconnect-detail">${escapeXml(message)}</p>
        <p>retrying every ${RETRY_MS / 1000}s&hellip;</p>
        <button id="retry-now">retry now</button>
      </div>`;
    this.root.querySelector("#retry-now")!.addEventListener("click", () => {
      void this.reload();
    });
  }

  private renderConnected(): void {
    const { model } = this.docs!;
    const labels = model.labels;
    this.root.innerHTML = `
      <header class="top">
        <h1>attention market explorer</h1>
        <span class="chip chip-live">connected</span>
        <span class="chip">${labels.platforms.length} platforms</span>
        <span class="chip">${labels.opinions.length} opinions</span>
        <span class="chip">${labels.interventions.length} interventions</span>
        <span class="chip">${escapeXml(model.feature_transform)} features</span>
        <span class="chip">&theta; = ${model.tier1.theta.toFixed(3)}</span>
      </header>
      <main>
        <section id="ecosystem">
          <div class="section-head">
            <h2>market shares</h2>
            <label class="toggle">
              <input type="checkbox" id="overlay-realized">
              overlay realized shares
            </label>
          </div>
          <div id="share-charts" class="chart-grid"></div>
        </section>
        <section id="elasticities">
          <h2>time-averaged elasticities</h2>
          <div id="heatmaps" class="chart-grid"></div>
        </section>
        <section id="whatif">
          <h2>what-if scenarios</h2>
          <form id="scenario-form" class="scenario-form"></form>
          <div id="run-progress" class="run-progress"></div>
          <div id="cards" class="cards"></div>
        </section>
      </main>`;

    const overlay = this.root.querySelector<HTMLInputElement>("#overlay-realized")!;
    overlay.checked = this.overlayRealized;
    overlay.addEventListener("change", () => {
      this.overlayRealized = overlay.checked;
      this.renderShares();
    });

    this.renderShares();
    this.renderHeatmaps();
    this.renderForm();
    this.renderCards();
  }

  private renderShares(): void {
    const { shares } = this.docs!;
    const host = this.root.querySelector("#share-charts")!;
    host.innerHTML = shares.platforms
      .map((platform, p) => {
        const area = stackedAreaSvg({
          title: platform,
          startBin: shares.start,
          shares: shares.model[p],
          labels: shares.opinions,
          realized: this.overlayRealized ? shares.realized[p] : undefined,
        });
        const spark = sparklineSvg(shares.volume[p]);
        return `<figure class="panel">${area}${spark}</figure>`;
      })
      .join("");
  }

  private renderHeatmaps(): void {
    const e = this.docs!.elasticities;
    const cellLabels: string[] = [];
    e.platforms.forEach((p) =>
      e.opinions.forEach((o) => cellLabels.push(`${p}:${o}`)),
    );
    const M = e.opinions.length;
    const J = M;

    // rows react, columns drive; flattening (p, i) is layout, not math
    const endoValues = cellLabels.map((_, row) => {
      const p = Math.floor(row / M);
      const i = row % M;
      return cellLabels.map((_, col) => {
        const q = Math.floor(col / J);
        const j = col % J;
        return e.endogenous_mean[p][q][i][j];
      });
    });
    const endoCoverage = cellLabels.map((_, row) => {
      const p = Math.floor(row / M);
      const i = row % M;
      return cellLabels.map((_, col) => {
        const q = Math.floor(col / J);
        const j = col % J;
        return e.endogenous_coverage[p][q][i][j];
      });
    });
    const interValues = cellLabels.map((_, row) => {
      const p = Math.floor(row / M);
      const i = row % M;
      return e.interventions.map((_, k) => e.intervention_mean[p][i][k]);
    });
    const interCoverage = cellLabels.map((_, row) => {
      const p = Math.floor(row / M);
      const i = row % M;
      return e.interventions.map((_, k) => e.intervention_coverage[p][i][k]);
    });

    this.root.querySelector("#heatmaps")!.innerHTML =
      `<figure class="panel">${heatmapSvg({
        title: "share response to opinion intensities",
        values: endoValues,
        coverage: endoCoverage,
        rowLabels: cellLabels,
        colLabels: cellLabels,
      })}</figure>` +
      `<figure class="panel">${heatmapSvg({
        title: "share response to interventions",
        values: interValues,
        coverage: interCoverage,
        rowLabels: cellLabels,
        colLabels: e.interventions,
      })}</figure>`;
  }

  private renderForm(): void {
    const form = this.root.querySelector<HTMLFormElement>("#scenario-form");
    if (!form || !this.docs) return;
    const { interventions } = this.docs.model.labels;
    const T = this.binCount();
    const options = interventions
      .map((name) => {
        const sel = name === this.form.intervention ? " selected" : "";
        return `<option value="${escapeXml(name)}"${sel}>${escapeXml(name)}</option>`;
      })
      .join("");
    form.innerHTML = `
      <label>intervention
        <select name="intervention">${options}</select>
      </label>
      <label>modulation r <output id="r-value">${this.form.r.toFixed(2)}</output>
        <input type="range" name="r" min="-1" max="1" step="0.05"
               value="${this.form.r}">
      </label>
      <label>changepoint (1..${T - 1})
        <input type="number" name="changepoint" min="1" max="${T - 1}"
               value="${this.form.changepoint}">
      </label>
      <label>simulations
        <input type="number" name="nSims" min="1" value="${this.form.nSims}">
      </label>
      <label>seed
        <input type="number" name="seed" value="${this.form.seed}">
      </label>
      <button type="submit">run scenario</button>`;

    const readForm = (): ScenarioForm =>
      sanitizeForm(
        {
          intervention:
            form.querySelector<HTMLSelectElement>("[name=intervention]")!.value,
          r: Number(form.querySelector<HTMLInputElement>("[name=r]")!.value),
          changepoint: Number(
            form.querySelector<HTMLInputElement>("[name=changepoint]")!.value,
          ),
          nSims: Number(form.querySelector<HTMLInputElement>("[name=nSims]")!.value),
          seed: Number(form.querySelector<HTMLInputElement>("[name=seed]")!.value),
        },
        T,
      );

    // handler properties, not addEventListener: renderForm may run again
    // after a hashchange and must not stack duplicate listeners
    form.oninput = () => {
      this.form = readForm();
      form.querySelector<HTMLOutputElement>("#r-value")!.value =
        this.form.r.toFixed(2);
      window.history.replaceState(null, "", `#${encodeFragment(this.form)}`);
    };
    form.onsubmit = (ev) => {
      ev.preventDefault();
      this.form = readForm();
      window.history.replaceState(null, "", `#${encodeFragment(this.form)}`);
      void this.submitScenario();
    };
  }

  private progressLine(text: string, cls = ""): void {
    const host = this.root.querySelector("#run-progress");
    if (host) host.innerHTML = text ? `<p class="${cls}">${text}</p>` : "";
  }

  private async submitScenario(): Promise<void> {
    const req = toRequest(this.form);
    const key = requestKey(req);
    const known = this.byRequest.get(key);
    if (known !== undefined && this.cards.has(known)) {
      // the service would answer from cache; just re-pin the card we have
      this.cards.get(known)!.pinnedAt = Date.now();
      this.progressLine("identical scenario already on the board", "muted");
      this.renderCards(known);
      return;
    }
    const token = this.tracker.begin();
    this.progressLine(
      `running ${escapeXml(String(req.intervention))} at r=${req.r}&hellip;`,
    );
    try {
      const doc = await this.client.runScenario(req, (beats) => {
        if (this.tracker.isCurrent(token)) {
          this.progressLine(
            `running ${escapeXml(String(req.intervention))} at r=${req.r}` +
              ` &middot; ${beats} heartbeat${beats === 1 ? "" : "s"}`,
          );
        }
      });
      if (!this.tracker.isCurrent(token)) return; // superseded, drop it
      this.cards.set(doc.id, { doc, pinnedAt: Date.now() });
      this.byRequest.set(key, doc.id);
      this.progressLine("");
      this.renderCards(doc.id);
    } catch (err) {
      if (!this.tracker.isCurrent(token)) return;
      if (err instanceof ServiceError) {
        this.progressLine(
          `scenario failed: ${escapeXml(JSON.stringify(err.detail))}`,
          "error",
        );
      } else {
        this.progressLine(`scenario failed: ${escapeXml(String(err))}`, "error");
        this.docs = null;
        this.renderDisconnected(err);
        this.retryTimer = setTimeout(() => void this.reload(), RETRY_MS);
      }
    }
  }

  private renderCards(highlightId?: string): void {
    const host = this.root.querySelector("#cards");
    if (!host) return;
    const ordered = [...this.cards.values()].sort(
      (a, b) => b.pinnedAt - a.pinnedAt,
    );
    host.innerHTML = ordered
      .map(({ doc }) => {
        const s = doc.scenario;
        const bars = doc.platforms
          .map((platform, p) => {
            const svg = changeBarsSvg({
              values: doc.share_percent_change[p],
              low: doc.share_change_low[p],
              high: doc.share_change_high[p],
              labels: doc.opinions,
            });
            const vol = doc.volume_percent_change[p];
            const volTxt = vol === null ? "n/a" : `${vol >= 0 ? "+" : ""}${vol.toFixed(2)}%`;
            return `<div class="card-platform">
              <h4>${escapeXml(platform)} <span class="muted">volume ${volTxt}</span></h4>
              ${svg}
            </div>`;
          })
          .join("");
        const flash = doc.id === highlightId ? " card-flash" : "";
        return `<article class="card${flash}" data-id="${doc.id}">
          <header>
            <strong>${escapeXml(s.intervention)}</strong>
            <span class="chip">r = ${s.r}</span>
            <span class="chip">changepoint ${s.changepoint}</span>
            <span class="chip">${s.n_sims} sims</span>
            <span class="chip">seed ${s.seed}</span>
            <button class="card-drop" data-id="${doc.id}" title="remove">&times;</button>
          </header>
          ${bars}
        </article>`;
      })
      .join("");
    host.querySelectorAll<HTMLButtonElement>(".card-drop").forEach((btn) => {
      btn.addEventListener("click", () => {
        const id = btn.dataset.id!;
        this.cards.delete(id);
        for (const [k, v] of this.byRequest) {
          if (v === id) this.byRequest.delete(k);
        }
        this.renderCards();
      });
    });
  }
}
