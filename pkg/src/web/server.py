#!/usr/bin/env python3
"""
FastAPI Service for THz Semi-Blind Experiments
==============================================

Thin HTTP surface over the harness so scenarios can be checked and small
runs launched from other tools.

Architecture:
- GET  /health         liveness
- POST /api/validate   every configuration problem of a scenario
- POST /api/bound      analytic ML MSE / C-CRLB curves and the WD-SB gain
- POST /api/run        Monte Carlo run, rows returned as JSON (trial count capped)

Usage:
    python src/web/server.py            # listens on $PORT (default 3000)
"""

import asyncio
import logging
import math
import os
import sys
import time
from typing import Any, Dict, List, Optional

import uvicorn
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

# Add the project root to the path so we can import from src/
project_root = os.path.join(os.path.dirname(__file__), '..', '..')
sys.path.insert(0, project_root)
from src.bounds.ccrlb import wd_sb_gain
from src.core.errors import ConfigError, ThzSbError
from src.harness.config import RuntimeSettings, configure_logging, parse_scenario
from src.harness.experiment import compute_bounds, run_experiment

logger = logging.getLogger(__name__)

MAX_SERVICE_TRIALS = 200

# =============================================================================
# FastAPI App Setup
# =============================================================================

app = FastAPI(
    title="THz Semi-Blind - Channel Estimation Experiments",
    description="Validate scenarios, compute bounds and run small Monte Carlo experiments",
    version="1.0.0"
)

# =============================================================================
# Request/Response Models
# =============================================================================

class ScenarioRequest(BaseModel):
    """Scenario in the same schema as the JSON files under configs/"""
    scenario: Dict[str, Any] = Field(default_factory=dict)

    class Config:
        json_schema_extra = {
            "example": {
                "scenario": {
                    "system": {"n_bs": 32, "k_u": 8, "n_rf": 8, "tau_p": 8},
                    "sweep": {"parameter": "snr_db", "values": [0, 5, 10]},
                    "trials": 20,
                    "estimators": ["ml", "wd_sb_perfect"]
                }
            }
        }


class ValidationResponse(BaseModel):
    valid: bool
    problems: List[str] = []


class BoundRow(BaseModel):
    sweep_value: float
    ml_mse: float
    ccrlb_mse: float
    ml_nmse_db: float
    ccrlb_nmse_db: float
    gain_db: float


class BoundResponse(BaseModel):
    rows: List[BoundRow]
    processing_time: float


class RunRow(BaseModel):
    """MetricRow with non-finite values sent as null"""
    sweep_value: Optional[float]
    method: str
    metric: str
    mean: Optional[float]
    stderr: float
    trials: int
    threshold: Optional[float] = None


class RunResponse(BaseModel):
    status: str
    processing_time: float
    rows: List[RunRow] = []


def _finite(value: Optional[float]) -> Optional[float]:
    return value if value is not None and math.isfinite(value) else None


def _scenario_or_422(request: ScenarioRequest):
    try:
        return parse_scenario(request.scenario)
    except ConfigError as e:
        raise HTTPException(status_code=422, detail={"message": str(e), "problems": e.problems})

# =============================================================================
# Routes
# =============================================================================

@app.get("/health")
async def health_check():
    """Health check endpoint"""
    return {"status": "healthy", "service": "THz Semi-Blind API"}


@app.post("/api/validate", response_model=ValidationResponse)
async def validate_scenario(request: ScenarioRequest):
    """List every configuration problem without running anything."""
    try:
        parse_scenario(request.scenario)
    except ConfigError as e:
        return ValidationResponse(valid=False, problems=e.problems or [str(e)])
    return ValidationResponse(valid=True)


@app.post("/api/bound", response_model=BoundResponse)
async def bound_curves(request: ScenarioRequest):
    """Analytic curves for every sweep point."""
    start_time = time.perf_counter()
    cfg = _scenario_or_422(request)
    try:
        table = await asyncio.to_thread(compute_bounds, cfg)
    except ThzSbError as e:
        logger.error(f"❌ Bound computation failed: {e}")
        raise HTTPException(status_code=500, detail=str(e))
    rows = [BoundRow(**{k: float(v) for k, v in record.items()})
            for record in table.to_dict(orient="records")]
    return BoundResponse(rows=rows, processing_time=time.perf_counter() - start_time)


@app.post("/api/run", response_model=RunResponse)
async def run_scenario(request: ScenarioRequest):
    """Small Monte Carlo run executed in a worker thread."""
    start_time = time.perf_counter()
    cfg = _scenario_or_422(request)
    if cfg.trials > MAX_SERVICE_TRIALS:
        raise HTTPException(status_code=422, detail={
            "message": "too many trials for an interactive run",
            "problems": [f"trials must be <= {MAX_SERVICE_TRIALS}, got {cfg.trials}"],
        })
    try:
        rows = await asyncio.to_thread(run_experiment, cfg)
    except ThzSbError as e:
        logger.error(f"❌ Run failed: {e}")
        raise HTTPException(status_code=500, detail=str(e))

    return RunResponse(
        status="success",
        processing_time=time.perf_counter() - start_time,
        rows=[RunRow(sweep_value=_finite(r.sweep_value), method=r.method, metric=r.metric,
                     mean=_finite(r.mean), stderr=r.stderr, trials=r.trials,
                     threshold=r.threshold) for r in rows],
    )


@app.get("/api/gain")
async def gain(n_bs: int, k_u: int):
    """Closed-form WD-SB MSE gain over ML in dB."""
    if n_bs < 1 or k_u < 1 or k_u > n_bs:
        raise HTTPException(status_code=422, detail="need 1 <= k_u <= n_bs")
    return {"n_bs": n_bs, "k_u": k_u, "gain_db": wd_sb_gain(n_bs, k_u)}

# =============================================================================
# Development Server
# =============================================================================

if __name__ == "__main__":
    settings = RuntimeSettings()
    configure_logging(settings.LOG_LEVEL)
    port = settings.PORT

    print("🚀 Starting THz Semi-Blind API")
    print(f"📋 API Docs: http://localhost:{port}/docs")
    print(f"🔍 Health Check: http://localhost:{port}/health")

    uvicorn.run(
        app,
        host="0.0.0.0",
        port=port,
        log_level=settings.LOG_LEVEL.lower()
    )
