"""HTTP API over a fitted model and its dataset.

Endpoints:
  GET  /model                  model parameters, transform, stats, labels
  GET  /shares?start&end       model and realized share paths over the data
  GET  /elasticities?start&end time-averaged elasticities with coverage
  POST /whatif                 run (or fetch) a counterfactual scenario
  GET  /whatif/{id}            status or cached result for a scenario
  GET  /whatif/{id}/events     SSE stream: progress events, then the result

Scenario ids are the sha256 of the canonical scenario JSON, so identical
requests share one id and repeated calls return byte-identical cached
results.  Malformed request bodies get 400; simulations that blow past the
intensity cap get 422 with the blow-up diagnostics.
"""

from __future__ import annotations

import asyncio
import hashlib
import json
import threading

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.responses import JSONResponse, StreamingResponse

from .datasets import DatasetBundle, ModelArtifact, _payload_from_artifact
from .interventions import WhatIfScenario, compute_elasticities, whatif_run
from .shares import build_features, share_series
from .simulate import IntensityExplosion


def _nested(arr: np.ndarray):
    """tolist with NaN mapped to null so the JSON stays strict."""
    values = np.asarray(arr, dtype=float)
    out = values.astype(object)
    out[~np.isfinite(values)] = None
    return out.tolist()


def _scenario_id(fields: dict) -> str:
    canon = json.dumps(fields, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


class WhatIfStore:
    """Cache of finished scenario results keyed by scenario id."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._pending: dict[str, dict] = {}
        self._results: dict[str, dict] = {}

    def result(self, sid: str) -> dict | None:
        with self._lock:
            return self._results.get(sid)

    def pending(self, sid: str) -> dict | None:
        with self._lock:
            return self._pending.get(sid)

    def submit(self, sid: str, fields: dict) -> None:
        with self._lock:
            if sid not in self._results:
                self._pending.setdefault(sid, fields)

    def finish(self, sid: str, doc: dict) -> None:
        with self._lock:
            self._results[sid] = doc
            self._pending.pop(sid, None)


def _parse_window(request: Request, T: int) -> tuple[int, int]:
    start = request.query_params.get("start", "1")
    end = request.query_params.get("end", str(T))
    try:
        a, b = int(start), int(end)
    except ValueError:
        raise HTTPException(400, detail="start and end must be integers") from None
    if not 1 <= a <= b <= T:
        raise HTTPException(400, detail=f"window must fit 1..{T}, got {a}..{b}")
    return a, b


def make_app(
    model: ModelArtifact,
    bundle: DatasetBundle,
    frontend_dir: str | None = None,
) -> FastAPI:
    if model.feature_transform == "standardized" and model.stats is None:
        raise ValueError("model uses standardized features but carries no stats")
    if model.params2.P != bundle.counts.P or model.params2.M != bundle.counts.M:
        raise ValueError(
            f"model is for (P, M)=({model.params2.P}, {model.params2.M}), "
            f"dataset has ({bundle.counts.P}, {bundle.counts.M})"
        )

    panel = build_features(
        model.params1,
        model.params2.split,
        bundle.signals,
        bundle.counts,
        transform=model.feature_transform,
        stats=model.stats,
    )
    model_shares = share_series(model.params2, panel)
    realized = bundle.counts.realized_shares()
    elasticities = compute_elasticities(model.params2, panel)
    store = WhatIfStore()
    T = bundle.counts.T

    app = FastAPI(title="attention-market", docs_url=None, redoc_url=None)

    @app.get("/model")
    def get_model():
        return {"schema": "attention-market/model/1",
                **_payload_from_artifact(model)}

    @app.get("/shares")
    def get_shares(request: Request):
        a, b = _parse_window(request, T)
        sl = slice(a - 1, b)
        return {
            "start": a,
            "end": b,
            "platforms": list(bundle.platforms),
            "opinions": list(bundle.opinions),
            "model": model_shares[:, :, sl].tolist(),
            "realized": _nested(realized[:, :, sl]),
            "volume": bundle.counts.platform_totals()[:, sl].tolist(),
        }

    @app.get("/elasticities")
    def get_elasticities(request: Request):
        a, b = _parse_window(request, T)
        endo_mean, endo_cov = elasticities.time_average("endogenous", bins=(a, b))
        int_mean, int_cov = elasticities.time_average("intervention", bins=(a, b))
        return {
            "start": a,
            "end": b,
            "platforms": list(bundle.platforms),
            "opinions": list(bundle.opinions),
            "interventions": list(bundle.interventions),
            "endogenous_mean": _nested(endo_mean),
            "endogenous_coverage": endo_cov.tolist(),
            "intervention_mean": _nested(int_mean),
            "intervention_coverage": int_cov.tolist(),
        }

    def parse_scenario(body) -> tuple[str, dict, WhatIfScenario]:
        if not isinstance(body, dict):
            raise HTTPException(400, detail="request body must be a JSON object")
        allowed = {"intervention", "r", "changepoint", "n_sims", "seed", "wait"}
        unknown = set(body) - allowed
        if unknown:
            raise HTTPException(400, detail=f"unknown field(s): {sorted(unknown)}")
        for name in ("intervention", "r", "changepoint"):
            if name not in body:
                raise HTTPException(400, detail=f"missing field: {name}")
        name = body["intervention"]
        names = list(bundle.interventions)
        if isinstance(name, str) and name in names:
            k = names.index(name)
        elif isinstance(name, int) and 0 <= name < len(names):
            k = name
        else:
            raise HTTPException(
                400, detail=f"unknown intervention {name!r}; have {names}"
            )
        try:
            fields = {
                "k": k,
                "r": float(body["r"]),
                "changepoint": int(body["changepoint"]),
                "n_sims": int(body.get("n_sims", 50)),
                "seed": int(body.get("seed", 0)),
            }
        except (TypeError, ValueError):
            raise HTTPException(400, detail="r, changepoint, n_sims, seed must be numbers") from None
        if not 1 <= fields["changepoint"] < T:
            raise HTTPException(400, detail=f"changepoint must be in 1..{T - 1}")
        try:
            scenario = WhatIfScenario(**fields)
        except ValueError as exc:
            raise HTTPException(400, detail=str(exc)) from None
        return _scenario_id(fields), fields, scenario

    def run_scenario(sid: str, fields: dict, scenario: WhatIfScenario) -> dict:
        result = whatif_run(
            model.params1, model.params2, bundle.signals, scenario,
            stats=model.stats,
        )
        band_low, band_high = result.percent_change_band()
        doc = {
            "id": sid,
            "status": "done",
            "scenario": {**fields,
                         "intervention": bundle.interventions[fields["k"]]},
            "platforms": list(bundle.platforms),
            "opinions": list(bundle.opinions),
            "share_percent_change": _nested(result.percent_change),
            "share_change_low": _nested(band_low),
            "share_change_high": _nested(band_high),
            "volume_percent_change": _nested(result.volume_percent_change),
            "baseline_share": result.baseline_share.tolist(),
            "treated_share": result.treated_share.tolist(),
            "baseline_volume": result.baseline_volume.tolist(),
            "treated_volume": result.treated_volume.tolist(),
        }
        store.finish(sid, doc)
        return doc

    @app.post("/whatif")
    async def post_whatif(request: Request):
        try:
            body = await request.json()
        except json.JSONDecodeError:
            raise HTTPException(400, detail="request body is not valid JSON") from None
        sid, fields, scenario = parse_scenario(body)
        cached = store.result(sid)
        if cached is not None:
            return JSONResponse(cached)
        wait = body.get("wait", True)
        if not isinstance(wait, bool):
            raise HTTPException(400, detail="wait must be a boolean")
        if not wait:
            store.submit(sid, fields)
            return JSONResponse({"id": sid, "status": "accepted"}, status_code=202)
        try:
            doc = await asyncio.to_thread(run_scenario, sid, fields, scenario)
        except IntensityExplosion as exc:
            raise HTTPException(422, detail={
                "error": "intensity explosion",
                "bin": exc.bin_index,
                "replicate": exc.replicate,
                "platform": exc.platform,
                "value": exc.value,
                "cap": exc.cap,
            }) from None
        return JSONResponse(doc)

    @app.get("/whatif/{sid}")
    def get_whatif(sid: str):
        cached = store.result(sid)
        if cached is not None:
            return JSONResponse(cached)
        if store.pending(sid) is not None:
            return JSONResponse({"id": sid, "status": "accepted"})
        raise HTTPException(404, detail=f"unknown scenario id {sid}")

    @app.get("/whatif/{sid}/events")
    async def whatif_events(sid: str):
        cached = store.result(sid)
        fields = store.pending(sid)
        if cached is None and fields is None:
            raise HTTPException(404, detail=f"unknown scenario id {sid}")

        def sse(event: str, data: dict) -> bytes:
            return f"event: {event}\ndata: {json.dumps(data)}\n\n".encode()

        async def stream():
            if cached is not None:
                yield sse("result", cached)
                return
            scenario = WhatIfScenario(**fields)
            task = asyncio.create_task(
                asyncio.to_thread(run_scenario, sid, fields, scenario)
            )
            yield sse("progress", {"id": sid, "status": "running"})
            while not task.done():
                await asyncio.sleep(0.05)
                if not task.done():
                    yield sse("progress", {"id": sid, "status": "running"})
            try:
                doc = task.result()
            except IntensityExplosion as exc:
                yield sse("error", {"error": "intensity explosion",
                                    "bin": exc.bin_index, "value": exc.value})
                return
            yield sse("result", doc)

        return StreamingResponse(stream(), media_type="text/event-stream")

    if frontend_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=frontend_dir, html=True),
                  name="frontend")
    else:
        @app.get("/")
        def index():
            return {
                "endpoints": ["/model", "/shares", "/elasticities", "/whatif"],
            }

    return app
