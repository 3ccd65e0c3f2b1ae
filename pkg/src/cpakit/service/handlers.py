"""The operations behind the service endpoints.

The CLI calls these directly for local runs; the FastAPI app exposes the
same functions over HTTP. Paths are resolved on the machine the handler
runs on.
"""

from __future__ import annotations

import numpy as np

from ..engine import attack, evolution, realign
from ..power_model import parse_model
from ..report import summarize
from ..simulator import LeakageConfig, acquire_campaign, key_rng
from ..traceio import export_evolution, read_traceset, write_traceset
from .schemas import (
    DEFAULT_CHECKPOINTS,
    AttackRequest,
    AttackResponse,
    ByteTop,
    CandidateScore,
    EvolveRequest,
    EvolveResponse,
    GroundTruthMetrics,
    InspectRequest,
    InspectResponse,
    SimulateRequest,
    SimulateResponse,
)


def _parse_key(text: str, seed: int) -> bytes:
    if text == "random":
        return bytes(key_rng(seed).integers(0, 256, size=16, dtype=np.uint8))
    try:
        key = bytes.fromhex(text)
    except ValueError:
        raise ValueError(f"key must be 32 hex characters or 'random', got {text!r}") from None
    if len(key) != 16:
        raise ValueError(f"key must be 32 hex characters (16 bytes), got {len(key)} bytes")
    return key


def _config_from_request(req: SimulateRequest) -> LeakageConfig:
    return LeakageConfig(
        samples_per_trace=req.samples,
        trigger_index=req.trigger_index,
        byte_spacing=req.byte_spacing,
        xor_offset=req.xor_offset,
        sbox_offset=req.sbox_offset,
        leak_coefficient=req.leak_coeff,
        baseline=req.baseline,
        noise_sigma=req.noise_sigma,
        drift_sigma=req.drift_sigma,
        jitter_max=req.jitter_max,
        drop_probability=req.drop_prob,
        repeats=req.repeats,
        interrupts_disabled=req.no_interrupts,
        acquisition_delay=req.acq_delay,
        polarity=req.polarity,
    )


def run_simulate(req: SimulateRequest) -> SimulateResponse:
    key = _parse_key(req.key, req.seed)
    config = _config_from_request(req)
    config.validate()
    ts = acquire_campaign(key, req.plaintexts, config, req.seed)
    if not req.embed_key:
        ts.key_under_test = None
    write_traceset(ts, req.out)
    return SimulateResponse(
        out=req.out,
        key=key.hex(),
        num_records=ts.num_traces,
        omitted_plaintexts=req.plaintexts - ts.num_traces,
        samples_per_trace=ts.samples_per_trace,
        embedded_key=req.embed_key,
    )


def run_attack(req: AttackRequest) -> AttackResponse:
    ts = read_traceset(req.in_path)
    if req.realign is not None:
        ts = realign(ts, reference_index=0, max_shift=req.realign)
    spec = parse_model(req.model)
    result = attack(ts, spec, max_workers=req.threads)
    summary = summarize(result, ts.key_under_test, top_k=req.top)

    per_byte = [
        ByteTop(
            byte_index=b,
            top=[CandidateScore(candidate=c, peak_abs_rho=r) for c, r in rows],
        )
        for b, rows in enumerate(summary.top)
    ]
    ground_truth = None
    verdict = "no-ground-truth"
    if summary.true_key is not None:
        ground_truth = GroundTruthMetrics(
            true_key=summary.true_key.hex(),
            ranks=summary.true_ranks,
            rank1_count=summary.rank1_count,
            complement_rank1_count=summary.complement_rank1_count,
            recovered=summary.recovered,
        )
        verdict = "recovered" if summary.recovered else "not-recovered"
    return AttackResponse(
        best_key=summary.best_key.hex(),
        model=summary.model,
        num_traces=ts.num_traces,
        per_byte=per_byte,
        ground_truth=ground_truth,
        verdict=verdict,
    )


def plan_checkpoints(requested: list[int] | None, num_traces: int) -> tuple[list[int], list[int]]:
    """Sorted unique checkpoints clipped to the trace count.

    Returns (kept, clipped-away). Falls back to a single checkpoint at
    the trace count when everything was clipped.
    """
    wanted = sorted(set(requested or DEFAULT_CHECKPOINTS))
    if any(c < 1 for c in wanted):
        raise ValueError("checkpoints must be >= 1")
    kept = [c for c in wanted if c <= num_traces]
    clipped = [c for c in wanted if c > num_traces]
    if not kept:
        kept = [num_traces]
    return kept, clipped


def run_evolve(req: EvolveRequest) -> EvolveResponse:
    ts = read_traceset(req.in_path)
    spec = parse_model(req.model)
    kept, clipped = plan_checkpoints(req.checkpoints, ts.num_traces)
    series = evolution(ts, spec, kept)
    rows = export_evolution(series, req.out, req.format)
    return EvolveResponse(
        out=req.out, format=req.format, checkpoints=kept, clipped=clipped, rows=rows
    )


def run_inspect(req: InspectRequest) -> InspectResponse:
    ts = read_traceset(req.in_path)
    return InspectResponse(
        num_records=ts.num_traces,
        samples_per_trace=ts.samples_per_trace,
        sample_rate_hz=ts.sample_rate_hz,
        has_ground_truth_key=ts.key_under_test is not None,
        sample_mean=float(ts.traces.mean()),
        sample_std=float(ts.traces.std()),
    )
