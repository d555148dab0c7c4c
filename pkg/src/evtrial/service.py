"""Thin HTTP facade over design, monitoring sessions, and comparison runs.

Sessions live in memory (optional JSON snapshot on write); each session has
a single-writer lock. /compare runs are capped so the interactive service
stays responsive; full-scale runs belong to the CLI.
"""

from __future__ import annotations

import json
import math
import os
import threading
import uuid
from dataclasses import replace
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import StreamingResponse
from pydantic import BaseModel, Field

from .confseq import confseq_interval
from .core import ConfigurationError, OutcomePair
from .design import DesignAlternative, design_grid, design_report, grow_lambda
from .futility import FutilityConfig
from .session import (
    MonitoringSession,
    save_session,
    session_new,
    session_summary,
    session_update,
)
from .simengine import simulate_comparison
from .cli import _config_from_doc


class DesignRequest(BaseModel):
    p_treatment: float
    p_control: float
    alpha: float = 0.025
    direction: str = "treatment_higher"
    lambda_grid: Optional[list[float]] = None


class FutilityBody(BaseModel):
    delta_min: float
    alpha_f: float = 0.10
    lambda_prime: float = 0.3


class SessionCreate(BaseModel):
    session_id: Optional[str] = None
    design: DesignRequest
    bet: Optional[float] = Field(default=None, description="betting fraction; default growth-optimal")
    cs_alpha: float = 0.05
    futility: Optional[FutilityBody] = None


class BatchPair(BaseModel):
    pair_index: int
    x_treatment: int
    x_control: int


class BatchBody(BaseModel):
    pairs: list[BatchPair]


class CompareBody(BaseModel):
    config: dict
    seed: int = 0
    stream: bool = False


class _Held:
    """A server-held session plus its chart trajectory and write lock."""

    def __init__(self, session: MonitoringSession):
        self.session = session
        self.lock = threading.Lock()
        self.trajectory: list[dict] = []


def create_app(
    cors_origin: str = "*",
    compare_rep_cap: int = 10000,
    snapshot_dir: Optional[str] = None,
) -> FastAPI:
    app = FastAPI(title="evtrial", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[cors_origin] if cors_origin != "*" else ["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    sessions: dict[str, _Held] = {}

    def _snapshot(held: _Held) -> None:
        if snapshot_dir:
            path = os.path.join(snapshot_dir, f"{held.session.session_id}.json")
            save_session(held.session, path)

    @app.post("/design")
    def post_design(body: DesignRequest):
        try:
            alt = DesignAlternative(
                body.p_treatment, body.p_control, direction=body.direction, alpha=body.alpha
            )
            lam_star = grow_lambda(alt)
        except (ConfigurationError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        if lam_star == 0.0:
            return {"lambda_star": 0.0, "growth_rate": 0.0, "expected_pairs": None,
                    "warning": "no power at null alternative", "grid": []}
        report = design_report(alt)
        lams = body.lambda_grid or [round(0.01 + 0.01 * i, 2) for i in range(98)]
        grid = design_grid([alt], lams)
        return {
            "lambda_star": report.lambda_star,
            "growth_rate": report.growth_rate,
            "expected_pairs": report.expected_pairs,
            "n_max_recommended": report.n_max_recommended,
            "alpha": alt.alpha,
            "grid": [
                {
                    "lambda": r.lam,
                    "growth": r.growth,
                    "expected_pairs": (
                        r.expected_pairs if math.isfinite(r.expected_pairs) else None
                    ),
                }
                for r in grid
            ],
        }

    @app.post("/sessions", status_code=201)
    def post_sessions(body: SessionCreate):
        sid = body.session_id or uuid.uuid4().hex[:12]
        if sid in sessions:
            raise HTTPException(status_code=409, detail=f"session {sid} already exists")
        try:
            design = DesignAlternative(
                body.design.p_treatment,
                body.design.p_control,
                direction=body.design.direction,
                alpha=body.design.alpha,
            )
            fut = (
                FutilityConfig(
                    delta_min=body.futility.delta_min,
                    alpha_f=body.futility.alpha_f,
                    lambda_prime=body.futility.lambda_prime,
                )
                if body.futility
                else None
            )
            held = _Held(
                session_new(sid, design, lam=body.bet, cs_alpha=body.cs_alpha,
                            futility_config=fut)
            )
        except (ConfigurationError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        sessions[sid] = held
        _snapshot(held)
        return session_summary(held.session)

    def _get(sid: str) -> _Held:
        held = sessions.get(sid)
        if held is None:
            raise HTTPException(status_code=404, detail=f"unknown session {sid}")
        return held

    @app.post("/sessions/{sid}/batch")
    def post_batch(sid: str, body: BatchBody):
        held = _get(sid)
        with held.lock:
            session = held.session
            if session.terminal is not None:
                raise HTTPException(
                    status_code=409, detail=f"session is terminal: {session.terminal}"
                )
            expected = session.n + 1
            appended = []
            for row in body.pairs:
                if row.pair_index != expected:
                    raise HTTPException(
                        status_code=409,
                        detail=f"pair_index {row.pair_index} does not continue the "
                               f"ledger (expected {expected})",
                    )
                try:
                    pair = OutcomePair(row.x_treatment, row.x_control)
                except ValueError as exc:
                    raise HTTPException(status_code=400, detail=str(exc))
                session, event = session_update(session, pair)
                lo, hi = confseq_interval(session.cs)
                appended.append(
                    {"n": session.n, "log_e": session.efficacy.log_wealth,
                     "cs_lo": lo, "cs_hi": hi}
                )
                expected += 1
                if event is not None:
                    break
            held.session = session
            held.trajectory.extend(appended)
            _snapshot(held)
            out = session_summary(session)
            out["appended"] = appended
            return out

    @app.get("/sessions/{sid}")
    def get_session(sid: str):
        held = _get(sid)
        out = session_summary(held.session)
        out["trajectory"] = held.trajectory
        return out

    @app.delete("/sessions/{sid}", status_code=204)
    def delete_session(sid: str):
        if sid not in sessions:
            raise HTTPException(status_code=404, detail=f"unknown session {sid}")
        del sessions[sid]
        return None

    @app.post("/compare")
    def post_compare(body: CompareBody):
        doc = dict(body.config)
        reps = doc.get("reps", 5000)
        if reps > compare_rep_cap:
            raise HTTPException(
                status_code=413,
                detail=f"reps {reps} exceeds the service cap {compare_rep_cap}",
            )
        try:
            config = _config_from_doc(doc, body.seed)
        except (ConfigurationError, KeyError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))

        if not body.stream:
            return simulate_comparison(config).to_dict()

        def progress():
            # chunked runs so the dashboard can show live partial rates
            total = config.reps
            step = max(500, total // 20)
            done = 0
            while done < total:
                take = min(step, total - done)
                part = simulate_comparison(
                    replace(config, reps=take, master_seed=config.master_seed + done)
                )
                done += take
                event = {
                    "done": done,
                    "total": total,
                    "partial_rates": {
                        r.rule_id: {"null": r.reject_rate_null, "alt": r.reject_rate_alt}
                        for r in part.results
                    },
                }
                yield json.dumps(event) + "\n"
            final = simulate_comparison(config)
            yield json.dumps({"done": total, "total": total,
                              "report": final.to_dict()}) + "\n"

        return StreamingResponse(progress(), media_type="application/jsonl")

    return app
