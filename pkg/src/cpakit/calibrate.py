"""Noise calibration: pick a noise level that makes recovery take a
realistic number of traces.

The simulator's noise amplitude has no physical anchor, so it is chosen
empirically: binary-search noise_sigma until the first checkpoint at
which all 16 key bytes rank first lands inside a target trace-count band.
"""

from __future__ import annotations

import logging
from dataclasses import replace

from .aes import IntermediateTarget
from .engine import evolution
from .power_model import PowerModelSpec
from .simulator import LeakageConfig, acquire_campaign

logger = logging.getLogger(__name__)

SBOX_HW = PowerModelSpec(IntermediateTarget.SBOX_OUTPUT)


def traces_to_full_recovery(
    key: bytes,
    config: LeakageConfig,
    seed: int,
    max_traces: int = 600,
    step: int = 50,
    spec: PowerModelSpec = SBOX_HW,
) -> int | None:
    """First checkpoint (multiples of step) at which all 16 bytes rank 1.

    Returns None when recovery is still incomplete at max_traces.
    """
    campaign = acquire_campaign(key, max_traces, config, seed)
    checkpoints = list(range(step, campaign.num_traces + 1, step))
    series = evolution(campaign, spec, checkpoints)
    for ci, cp in enumerate(checkpoints):
        if series.bytes_recovered(ci) == 16:
            return cp
    return None


def find_noise_sigma(
    key: bytes,
    config: LeakageConfig | None = None,
    seed: int = 0,
    target_low: int = 200,
    target_high: int = 600,
    max_traces: int = 600,
    step: int = 50,
    max_iterations: int = 12,
) -> float:
    """Binary-search noise_sigma until full recovery first occurs inside
    [target_low, target_high] traces.

    More noise means more traces: the search raises sigma while recovery
    completes too early and lowers it while recovery misses the budget.
    """
    base = config or LeakageConfig()
    signal = abs(base.leak_coefficient)
    lo, hi = 0.5 * signal, 200.0 * signal

    def probe(sigma: float) -> int | None:
        cfg = replace(base, noise_sigma=sigma)
        n = traces_to_full_recovery(key, cfg, seed, max_traces=max_traces, step=step)
        logger.info("calibration probe sigma=%.6g -> full recovery at %s traces", sigma, n)
        return n

    # Ensure the bracket actually straddles the band before bisecting.
    n_hi = probe(hi)
    while n_hi is not None:
        if target_low <= n_hi <= target_high:
            return hi
        lo, hi = hi, hi * 4.0
        if hi > 1e6 * signal:
            raise RuntimeError("could not find a noise level that defeats recovery")
        n_hi = probe(hi)
    for _ in range(max_iterations):
        mid = 0.5 * (lo + hi)
        n = probe(mid)
        if n is not None and target_low <= n <= target_high:
            return mid
        if n is None or n > target_high:
            hi = mid
        else:
            lo = mid
    raise RuntimeError(
        f"noise calibration failed to land in [{target_low}, {target_high}] "
        f"traces after {max_iterations} iterations"
    )
