"""FastAPI application wrapping the toolkit.

Endpoints operate on trace files visible to the server process; a lab
deployment runs this next to the capture storage and any number of
clients drive simulations, attacks, and exports against it.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from ..simulator import AllRepeatsDroppedError
from ..traceio import TraceFormatError
from . import handlers
from .schemas import (
    AttackRequest,
    AttackResponse,
    EvolveRequest,
    EvolveResponse,
    InspectRequest,
    InspectResponse,
    SimulateRequest,
    SimulateResponse,
)

app = FastAPI(
    title="cpakit",
    description="Correlation power analysis service: simulate AES-128 leakage "
    "campaigns, attack trace sets, and export correlation evolution data.",
    version="0.1.0",
)


def _run(handler, request):
    try:
        return handler(request)
    except FileNotFoundError as exc:
        raise HTTPException(status_code=404, detail=f"file not found: {exc.filename or exc}") from exc
    except (TraceFormatError, AllRepeatsDroppedError, ValueError) as exc:
        raise HTTPException(status_code=400, detail=str(exc)) from exc
    except OSError as exc:
        raise HTTPException(status_code=400, detail=f"i/o error: {exc}") from exc


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/simulate", response_model=SimulateResponse)
def simulate(request: SimulateRequest) -> SimulateResponse:
    return _run(handlers.run_simulate, request)


@app.post("/attack", response_model=AttackResponse)
def attack(request: AttackRequest) -> AttackResponse:
    return _run(handlers.run_attack, request)


@app.post("/evolve", response_model=EvolveResponse)
def evolve(request: EvolveRequest) -> EvolveResponse:
    return _run(handlers.run_evolve, request)


@app.post("/inspect", response_model=InspectResponse)
def inspect(request: InspectRequest) -> InspectResponse:
    return _run(handlers.run_inspect, request)
