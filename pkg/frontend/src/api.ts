// Typed client for the model service. Thin on purpose: it fetches, checks
// status, parses JSON, and streams scenario events; it never computes.

import { SseParser } from "./sse.js";
import type {
  ElasticitiesDoc,
  ModelDoc,
  ScenarioEvent,
  SharesDoc,
  WhatIfAccepted,
  WhatIfDoc,
  WhatIfRequest,
} from "./types.js";

export class ServiceError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(message);
  }
}

async function getJson<T>(base: string, path: string): Promise<T> {
  const res = await fetch(base + path, { headers: { accept: "application/json" } });
  if (!res.ok) {
    const detail = await res.json().catch(() => null);
    throw new ServiceError(`GET ${path} failed (${res.status})`, res.status, detail);
  }
  return (await res.json()) as T;
}

export class ServiceClient {
  constructor(readonly base: string = "") {}

  getModel(): Promise<ModelDoc> {
    return getJson(this.base, "/model");
  }

  getShares(): Promise<SharesDoc> {
    return getJson(this.base, "/shares");
  }

  getElasticities(): Promise<ElasticitiesDoc> {
    return getJson(this.base, "/elasticities");
  }

  async postWhatIf(req: WhatIfRequest): Promise<WhatIfDoc | WhatIfAccepted> {
    const res = await fetch(this.base + "/whatif", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    });
    const body = await res.json().catch(() => null);
    if (!res.ok) {
      throw new ServiceError(
        `POST /whatif failed (${res.status})`,
        res.status,
        body && typeof body === "object" ? (body as { detail?: unknown }).detail : body,
      );
    }
    return body as WhatIfDoc | WhatIfAccepted;
  }

  /** Stream /whatif/{id}/events as parsed frames until the body closes. */
  async *events(id: string): AsyncGenerator<ScenarioEvent> {
    const res = await fetch(`${this.base}/whatif/${id}/events`, {
      headers: { accept: "text/event-stream" },
    });
    if (!res.ok || res.body === null) {
      const detail = await res.json().catch(() => null);
      throw new ServiceError(`event stream failed (${res.status})`, res.status, detail);
    }
    const reader = res.body.getReader();
    const decoder = new TextDecoder();
    const parser = new SseParser();
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      for (const frame of parser.feed(decoder.decode(value, { stream: true }))) {
        yield {
          event: frame.event,
          data: JSON.parse(frame.data),
        } as ScenarioEvent;
      }
    }
  }

  /**
   * Run one scenario end to end: submit without waiting, then follow the
   * event stream. A scenario the service already answered resolves
   * immediately from its cache. An explosion diagnostic arrives as a
   * ServiceError with the service's detail attached.
   */
  async runScenario(
    req: WhatIfRequest,
    onProgress?: (beats: number) => void,
  ): Promise<WhatIfDoc> {
    const first = await this.postWhatIf({ ...req, wait: false });
    if (first.status === "done") return first;
    let beats = 0;
    for await (const ev of this.events(first.id)) {
      if (ev.event === "progress") {
        onProgress?.(++beats);
      } else if (ev.event === "result") {
        return ev.data;
      } else if (ev.event === "error") {
        throw new ServiceError("scenario failed", 422, ev.data);
      }
    }
    throw new ServiceError("event stream ended without a result", 0, null);
  }
}
