"""Synthetic device-under-test and oscilloscope.

Generates power traces for first-round AES execution with configurable
leakage and the usual acquisition pathologies: Gaussian sample noise,
per-capture DC drift, integer-sample trigger jitter from interrupts, and
dropped captures when the scope misses a trigger. A campaign pairs every
retained trace with the plaintext that produced it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .aes import BLOCK_SIZE, check_block
from .power_model import _HW, _SBOX_ARR
from .traceset import DEFAULT_SAMPLE_RATE_HZ, SAMPLE_DTYPE, TraceSet

logger = logging.getLogger(__name__)

# Stream tags keep the plaintext draw and each (plaintext, repeat) capture
# on independent, order-free random streams derived from one seed.
_PLAINTEXT_STREAM = 0
_CAPTURE_STREAM = 1
_KEY_STREAM = 2


class AllRepeatsDroppedError(ValueError):
    """Raised when a capture group contains no surviving captures."""


@dataclass
class LeakageConfig:
    """Every knob of the simulated acquisition chain.

    The 16 state bytes leak twice each: the XOR output at
    trigger_index + j*byte_spacing + xor_offset and the S-box output at
    xor_offset -> sbox_offset, each contributing
    polarity * leak_coefficient * HW(intermediate) volts on top of the
    baseline. interrupts_disabled forces jitter_max to 0 and
    acquisition_delay forces drop_probability to 0, mirroring the two
    firmware/scope fixes for those pathologies.
    """

    samples_per_trace: int = 2500
    trigger_index: int = 100
    byte_spacing: int = 120
    xor_offset: int = 0
    sbox_offset: int = 40
    leak_coefficient: float = 0.01
    baseline: float = 5.0
    noise_sigma: float = 0.0
    drift_sigma: float = 0.0
    jitter_max: int = 0
    drop_probability: float = 0.0
    repeats: int = 10
    interrupts_disabled: bool = False
    acquisition_delay: bool = False
    polarity: int = -1
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ

    @property
    def effective_jitter_max(self) -> int:
        return 0 if self.interrupts_disabled else self.jitter_max

    @property
    def effective_drop_probability(self) -> float:
        return 0.0 if self.acquisition_delay else self.drop_probability

    def validate(self) -> None:
        if self.samples_per_trace < 1:
            raise ValueError("samples_per_trace must be >= 1")
        if min(self.trigger_index, self.byte_spacing, self.xor_offset, self.sbox_offset) < 0:
            raise ValueError("trace geometry offsets must be non-negative")
        if self.noise_sigma < 0 or self.drift_sigma < 0:
            raise ValueError("noise_sigma and drift_sigma must be >= 0")
        if self.jitter_max < 0:
            raise ValueError("jitter_max must be >= 0")
        if not 0.0 <= self.drop_probability < 1.0:
            raise ValueError("drop_probability must lie in [0, 1)")
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.polarity not in (-1, 1):
            raise ValueError("polarity must be +1 or -1")
        jmax = self.effective_jitter_max
        first = self.trigger_index + min(self.xor_offset, self.sbox_offset) - jmax
        last = (
            self.trigger_index
            + 15 * self.byte_spacing
            + max(self.xor_offset, self.sbox_offset)
            + jmax
        )
        if first < 0 or last >= self.samples_per_trace:
            raise ValueError(
                "leak geometry out of range: samples "
                f"[{first}, {last}] must fit inside [0, {self.samples_per_trace})"
            )


@dataclass
class Capture:
    """One scope acquisition: a plaintext and its sampled waveform."""

    plaintext: bytes
    samples: np.ndarray
    dropped: bool = False


def capture_rng(seed: int, plaintext_index: int, repeat_index: int) -> np.random.Generator:
    """The random stream for one capture, independent of all others."""
    return np.random.default_rng([seed, _CAPTURE_STREAM, plaintext_index, repeat_index])


def plaintext_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([seed, _PLAINTEXT_STREAM])


def key_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng([seed, _KEY_STREAM])


def simulate_capture(
    plaintext: bytes,
    key: bytes,
    config: LeakageConfig,
    rng: np.random.Generator,
) -> Capture:
    """Simulate one acquisition of the first AES round.

    Draw order is fixed (drift, jitter, drop, noise) so that a config
    differing only in a disabled pathology consumes the random stream
    identically and reproduces the other run bit for bit.
    """
    config.validate()
    plaintext = check_block(plaintext, "plaintext")
    key = check_block(key, "key")

    drift = rng.normal(0.0, config.drift_sigma)
    jmax = config.effective_jitter_max
    jitter = int(rng.integers(-jmax, jmax + 1))
    dropped = bool(rng.random() < config.effective_drop_probability)
    samples = rng.normal(0.0, config.noise_sigma, config.samples_per_trace)
    samples += config.baseline + drift

    v = np.frombuffer(plaintext, dtype=np.uint8) ^ np.frombuffer(key, dtype=np.uint8)
    slots = config.trigger_index + jitter + config.byte_spacing * np.arange(BLOCK_SIZE)
    scale = config.polarity * config.leak_coefficient
    np.add.at(samples, slots + config.xor_offset, scale * _HW[v])
    np.add.at(samples, slots + config.sbox_offset, scale * _HW[_SBOX_ARR[v]])

    return Capture(plaintext=plaintext, samples=samples, dropped=dropped)


def average_repeats(captures: list[Capture]) -> Capture:
    """Pointwise mean of the non-dropped captures in one group."""
    if not captures:
        raise AllRepeatsDroppedError("capture group is empty")
    kept = [c for c in captures if not c.dropped]
    if not kept:
        raise AllRepeatsDroppedError(f"all {len(captures)} captures in the group were dropped")
    plaintext = kept[0].plaintext
    length = kept[0].samples.shape[0]
    for c in kept:
        if c.plaintext != plaintext:
            raise ValueError("cannot average captures of different plaintexts")
        if c.samples.shape[0] != length:
            raise ValueError("cannot average captures of different lengths")
    mean = np.mean([c.samples for c in kept], axis=0)
    return Capture(plaintext=plaintext, samples=mean, dropped=False)


def acquire_campaign(
    key: bytes,
    num_plaintexts: int,
    config: LeakageConfig,
    seed: int,
) -> TraceSet:
    """Run a full acquisition campaign against one key.

    For each of num_plaintexts uniformly random plaintexts, captures
    config.repeats waveforms, discards dropped ones, and stores the
    average alongside its plaintext. A plaintext whose every repeat
    dropped is omitted (and counted in a log line), so the result may
    hold fewer than num_plaintexts records but never a mispaired one.
    """
    config.validate()
    key = check_block(key, "key")
    if num_plaintexts < 1:
        raise ValueError("num_plaintexts must be >= 1")

    plaintexts = plaintext_rng(seed).integers(0, 256, size=(num_plaintexts, BLOCK_SIZE), dtype=np.uint8)

    kept_pts: list[np.ndarray] = []
    kept_traces: list[np.ndarray] = []
    omitted = 0
    for i in range(num_plaintexts):
        pt = bytes(plaintexts[i])
        group = [
            simulate_capture(pt, key, config, capture_rng(seed, i, r))
            for r in range(config.repeats)
        ]
        try:
            avg = average_repeats(group)
        except AllRepeatsDroppedError:
            omitted += 1
            continue
        kept_pts.append(plaintexts[i])
        kept_traces.append(avg.samples)

    if omitted:
        logger.warning("omitted %d of %d plaintexts whose every capture dropped", omitted, num_plaintexts)
    if not kept_traces:
        raise AllRepeatsDroppedError("every capture in the campaign was dropped")

    return TraceSet(
        plaintexts=np.vstack(kept_pts),
        traces=np.vstack(kept_traces).astype(SAMPLE_DTYPE),
        sample_rate_hz=config.sample_rate_hz,
        key_under_test=key,
    )


def noiseless(config: LeakageConfig | None = None, **overrides) -> LeakageConfig:
    """A copy of config with every pathology knob zeroed."""
    base = config or LeakageConfig()
    return replace(
        base,
        noise_sigma=0.0,
        drift_sigma=0.0,
        jitter_max=0,
        drop_probability=0.0,
        **overrides,
    )
