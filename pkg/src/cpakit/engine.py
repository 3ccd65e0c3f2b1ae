"""The attack core: hypothesis matrices, Pearson correlation surfaces,
candidate ranking, full-key recovery, streaming correlation, and
cross-correlation realignment.

All correlation math runs in binary64 regardless of how traces are stored.
Zero-variance rows or columns correlate to 0 rather than NaN, so constant
hypotheses (or flat samples) never poison a ranking; every rho is clipped
to [-1, 1].
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .aes import BLOCK_SIZE
from .power_model import _HW, LeakageMetric, IntermediateTarget, PowerModelSpec, leakage_table
from .traceset import TraceSet

NUM_CANDIDATES = 256

_CANDIDATES = np.arange(NUM_CANDIDATES, dtype=np.uint8)


class InsufficientTracesError(ValueError):
    """Raised when an operation needs more trace records than it was given."""


@dataclass
class HypothesisMatrix:
    """Predicted leakage for all 256 candidates of one key byte.

    values[k, i] is the model's prediction for candidate k on trace i.
    """

    byte_index: int
    values: np.ndarray

    def __post_init__(self) -> None:
        if not 0 <= self.byte_index < BLOCK_SIZE:
            raise ValueError(f"byte_index must be in [0, {BLOCK_SIZE})")
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] != NUM_CANDIDATES:
            raise ValueError(f"hypothesis matrix must be {NUM_CANDIDATES} x N")

    @property
    def num_traces(self) -> int:
        return self.values.shape[1]


@dataclass
class CorrelationSurface:
    """Pearson rho for every (candidate, sample point) of one key byte."""

    byte_index: int
    rho: np.ndarray


@dataclass
class ByteRanking:
    """Candidates of one key byte sorted by descending peak |rho|.

    Ties break toward the numerically smaller candidate so results are
    reproducible.
    """

    byte_index: int
    candidates: np.ndarray
    peak_abs_rho: np.ndarray

    def rank_of(self, candidate: int) -> int:
        """1-based rank of a candidate byte value."""
        return int(np.nonzero(self.candidates == candidate)[0][0]) + 1

    def top(self, k: int = 10) -> list[tuple[int, float]]:
        return [(int(c), float(r)) for c, r in zip(self.candidates[:k], self.peak_abs_rho[:k])]


@dataclass
class AttackResult:
    """Per-byte rankings and the byte-wise best-guess key."""

    best_key: bytes
    rankings: list[ByteRanking]
    model: PowerModelSpec


def _hypothesis_rows(plaintext_bytes: np.ndarray, spec: PowerModelSpec) -> np.ndarray:
    """(256, N) hypothesis values for one key byte's plaintext column."""
    pts = np.ascontiguousarray(plaintext_bytes, dtype=np.uint8)
    if spec.target is IntermediateTarget.XOR_OUTPUT and spec.metric is LeakageMetric.HAMMING_DISTANCE:
        # HD(p, p^k) = HW(k): constant per candidate.
        rows = np.repeat(spec.polarity * _HW[:, None], pts.shape[0], axis=1)
        return rows
    table = leakage_table(spec)
    return table[np.bitwise_xor.outer(_CANDIDATES, pts)]


def build_hypotheses(plaintexts, byte_index: int, spec: PowerModelSpec) -> HypothesisMatrix:
    """Hypothesis matrix for one key byte across all plaintexts.

    plaintexts may be an (N, 16) uint8 array or a sequence of 16-byte
    blocks.
    """
    if not 0 <= byte_index < BLOCK_SIZE:
        raise ValueError(f"byte_index must be in [0, {BLOCK_SIZE})")
    pts = np.asarray(
        [np.frombuffer(bytes(p), dtype=np.uint8) for p in plaintexts]
        if not isinstance(plaintexts, np.ndarray)
        else plaintexts,
        dtype=np.uint8,
    )
    if pts.ndim != 2 or pts.shape[1] != BLOCK_SIZE:
        raise ValueError(f"plaintexts must have shape (N, {BLOCK_SIZE})")
    return HypothesisMatrix(byte_index, _hypothesis_rows(pts[:, byte_index], spec))


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Sample Pearson correlation; 0.0 when either input has no variance."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"inputs must be equal-length vectors, got {x.shape} and {y.shape}")
    if x.shape[0] < 2:
        raise InsufficientTracesError("pearson needs at least 2 points")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt(np.dot(xc, xc) * np.dot(yc, yc))
    if denom == 0.0:
        return 0.0
    return float(np.clip(np.dot(xc, yc) / denom, -1.0, 1.0))


def _centered(traces: TraceSet) -> tuple[np.ndarray, np.ndarray]:
    """Column-centered trace matrix and per-sample sums of squares."""
    t = traces.traces.astype(np.float64, copy=False)
    tc = t - t.mean(axis=0)
    return tc, np.einsum("ij,ij->j", tc, tc)


def _mirror_rows(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split into (rows 0..127, rows 255..128); the halves are slot-aligned.

    Complement candidates are mirror rows (k XOR 0xFF = 255 - k). Feeding
    each half through identically-shaped kernels puts every complement pair
    in the same slot of two equal computations, so BLAS applies the same
    summation grouping to both and sign symmetry survives bit for bit.
    """
    half = NUM_CANDIDATES // 2
    return np.ascontiguousarray(a[:half]), np.ascontiguousarray(a[:half - 1 : -1])


def _surface_from_centered(hyp: HypothesisMatrix, tc: np.ndarray, ss_t: np.ndarray) -> np.ndarray:
    # Center rows as (n*h - sum)/n: model values are small integers, so the
    # numerator is exact and complement hypothesis rows (h' = -8 - h under
    # the XOR/HW model) center to exact negations. Together with the
    # mirrored half-matrix products their |rho| ties bitwise and the
    # ranking tie-break stays deterministic.
    n = hyp.values.shape[1]
    hc = (hyp.values * n - hyp.values.sum(axis=1, keepdims=True)) / n
    top, bottom = _mirror_rows(hc)
    ss_h = np.concatenate(
        [np.einsum("ij,ij->i", top, top), np.einsum("ij,ij->i", bottom, bottom)[::-1]]
    )
    num = np.vstack([top @ tc, (bottom @ tc)[::-1]])
    denom = np.sqrt(np.outer(ss_h, ss_t))
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = num / denom
    rho[~np.isfinite(rho)] = 0.0
    np.clip(rho, -1.0, 1.0, out=rho)
    return rho


def correlate(traces: TraceSet, hyp: HypothesisMatrix) -> CorrelationSurface:
    """Batch Pearson correlation of every candidate row against every
    sample column."""
    if traces.num_traces < 2:
        raise InsufficientTracesError(
            f"correlation needs at least 2 traces, got {traces.num_traces}"
        )
    if hyp.num_traces != traces.num_traces:
        raise ValueError(
            f"hypothesis covers {hyp.num_traces} traces but trace set has {traces.num_traces}"
        )
    tc, ss_t = _centered(traces)
    return CorrelationSurface(hyp.byte_index, _surface_from_centered(hyp, tc, ss_t))


def _rank_peaks(peaks: np.ndarray) -> np.ndarray:
    """Candidate order by descending peak; ties toward smaller candidate."""
    # lexsort uses the last key as primary.
    return np.lexsort((np.arange(NUM_CANDIDATES), -peaks))


def rank_candidates(surface: CorrelationSurface) -> ByteRanking:
    peaks = np.abs(surface.rho).max(axis=1)
    order = _rank_peaks(peaks)
    return ByteRanking(surface.byte_index, order, peaks[order])


def attack(traces: TraceSet, spec: PowerModelSpec, max_workers: int = 1) -> AttackResult:
    """Recover all 16 key bytes by maximum absolute correlation.

    The per-byte work is independent; max_workers > 1 spreads the 16
    bytes over a thread pool. Results are merged in byte order, so the
    outcome is identical for any worker count.
    """
    if traces.num_traces < 2:
        raise InsufficientTracesError(f"attack needs at least 2 traces, got {traces.num_traces}")
    tc, ss_t = _centered(traces)

    def one_byte(byte_index: int) -> ByteRanking:
        hyp = HypothesisMatrix(byte_index, _hypothesis_rows(traces.plaintexts[:, byte_index], spec))
        rho = _surface_from_centered(hyp, tc, ss_t)
        peaks = np.abs(rho).max(axis=1)
        order = _rank_peaks(peaks)
        return ByteRanking(byte_index, order, peaks[order])

    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            rankings = list(pool.map(one_byte, range(BLOCK_SIZE)))
    else:
        rankings = [one_byte(b) for b in range(BLOCK_SIZE)]

    best_key = bytes(int(r.candidates[0]) for r in rankings)
    return AttackResult(best_key=best_key, rankings=rankings, model=spec)


class CorrelationAccumulator:
    """Streaming Pearson sums for one key byte.

    Keeps n, sum(h), sum(t), sum(h^2), sum(t^2) and sum(h t) per
    (candidate, sample) in binary64; a snapshot reconstructs the full
    256 x samples correlation surface from the sums alone, so feeding
    trace i costs O(256 x samples) no matter how many came before.
    """

    def __init__(self, byte_index: int, spec: PowerModelSpec, num_samples: int) -> None:
        if not 0 <= byte_index < BLOCK_SIZE:
            raise ValueError(f"byte_index must be in [0, {BLOCK_SIZE})")
        self.byte_index = byte_index
        self.spec = spec
        self.num_samples = int(num_samples)
        self.n = 0
        self.sum_h = np.zeros(NUM_CANDIDATES)
        self.sum_hh = np.zeros(NUM_CANDIDATES)
        self.sum_t = np.zeros(self.num_samples)
        self.sum_tt = np.zeros(self.num_samples)
        self.sum_ht = np.zeros((NUM_CANDIDATES, self.num_samples))

    def _check_trace(self, trace: np.ndarray) -> np.ndarray:
        t = np.asarray(trace, dtype=np.float64)
        if t.shape != (self.num_samples,):
            raise ValueError(f"trace must have {self.num_samples} samples, got {t.shape}")
        return t

    def update(self, plaintext: bytes, trace: np.ndarray) -> None:
        """Fold one (plaintext, trace) record into the running sums."""
        pt = bytes(plaintext)
        h = _hypothesis_rows(np.frombuffer(pt, dtype=np.uint8)[self.byte_index : self.byte_index + 1],
                             self.spec)[:, 0]
        t = self._check_trace(trace)
        self.n += 1
        self.sum_h += h
        self.sum_hh += h * h
        self.sum_t += t
        self.sum_tt += t * t
        self.sum_ht += np.outer(h, t)

    def update_block(self, plaintexts: np.ndarray, traces: np.ndarray) -> None:
        """Fold a block of records at once (same sums, BLAS-batched)."""
        pts = np.ascontiguousarray(plaintexts, dtype=np.uint8)
        t = np.asarray(traces, dtype=np.float64)
        if pts.ndim != 2 or t.ndim != 2 or pts.shape[0] != t.shape[0]:
            raise ValueError("plaintexts and traces must be matching 2-D blocks")
        if t.shape[1] != self.num_samples:
            raise ValueError(f"traces must have {self.num_samples} samples")
        h = _hypothesis_rows(pts[:, self.byte_index], self.spec)
        self.n += t.shape[0]
        self.sum_h += h.sum(axis=1)
        self.sum_hh += (h * h).sum(axis=1)
        self.sum_t += t.sum(axis=0)
        self.sum_tt += (t * t).sum(axis=0)
        self.sum_ht += h @ t

    def merge(self, other: "CorrelationAccumulator") -> None:
        """Absorb another accumulator over disjoint records."""
        if (other.byte_index, other.spec, other.num_samples) != (
            self.byte_index,
            self.spec,
            self.num_samples,
        ):
            raise ValueError("accumulators must share byte index, model, and trace length")
        self.n += other.n
        self.sum_h += other.sum_h
        self.sum_hh += other.sum_hh
        self.sum_t += other.sum_t
        self.sum_tt += other.sum_tt
        self.sum_ht += other.sum_ht

    def snapshot(self) -> CorrelationSurface:
        """Correlation surface over everything accumulated so far."""
        if self.n < 2:
            return CorrelationSurface(self.byte_index, np.zeros((NUM_CANDIDATES, self.num_samples)))
        n = float(self.n)
        num = n * self.sum_ht - np.outer(self.sum_h, self.sum_t)
        var_h = np.maximum(n * self.sum_hh - self.sum_h**2, 0.0)
        var_t = np.maximum(n * self.sum_tt - self.sum_t**2, 0.0)
        denom = np.sqrt(np.outer(var_h, var_t))
        with np.errstate(divide="ignore", invalid="ignore"):
            rho = num / denom
        rho[~np.isfinite(rho)] = 0.0
        np.clip(rho, -1.0, 1.0, out=rho)
        return CorrelationSurface(self.byte_index, rho)


@dataclass
class EvolutionSeries:
    """Peak |rho| of all 256 candidates per byte as traces accumulate.

    peak_abs_rho has shape (16, len(checkpoints), 256), indexed by
    candidate value (not rank).
    """

    checkpoints: list[int]
    peak_abs_rho: np.ndarray
    model: PowerModelSpec
    true_key: bytes | None = field(default=None)

    def ranking_at(self, byte_index: int, checkpoint_index: int) -> ByteRanking:
        peaks = self.peak_abs_rho[byte_index, checkpoint_index]
        order = _rank_peaks(peaks)
        return ByteRanking(byte_index, order, peaks[order])

    def true_rank(self, byte_index: int, checkpoint_index: int) -> int | None:
        """1-based rank of the true key byte, or None without ground truth."""
        if self.true_key is None:
            return None
        peaks = self.peak_abs_rho[byte_index, checkpoint_index]
        k = self.true_key[byte_index]
        better = int(np.sum(peaks > peaks[k]))
        tied_smaller = int(np.sum((peaks == peaks[k]) & (np.arange(NUM_CANDIDATES) < k)))
        return better + tied_smaller + 1

    def bytes_recovered(self, checkpoint_index: int) -> int | None:
        """How many of the 16 true key bytes rank first at a checkpoint."""
        if self.true_key is None:
            return None
        return sum(self.true_rank(b, checkpoint_index) == 1 for b in range(BLOCK_SIZE))


def evolution(traces: TraceSet, spec: PowerModelSpec, checkpoints: list[int]) -> EvolutionSeries:
    """Track every candidate's peak |rho| at each checkpoint in one pass.

    checkpoints must be sorted ascending and must not exceed the trace
    count; each snapshot costs one pass over the traces in total.
    """
    cps = [int(c) for c in checkpoints]
    if not cps:
        raise ValueError("checkpoints must be non-empty")
    if any(b >= a for a, b in zip(cps[1:], cps)):
        raise ValueError("checkpoints must be strictly ascending")
    if cps[0] < 1 or cps[-1] > traces.num_traces:
        raise ValueError(
            f"checkpoints must lie in [1, {traces.num_traces}], got {cps[0]}..{cps[-1]}"
        )

    accs = [CorrelationAccumulator(b, spec, traces.samples_per_trace) for b in range(BLOCK_SIZE)]
    peaks = np.zeros((BLOCK_SIZE, len(cps), NUM_CANDIDATES))
    done = 0
    for ci, cp in enumerate(cps):
        block_pts = traces.plaintexts[done:cp]
        block_traces = traces.traces[done:cp]
        for acc in accs:
            acc.update_block(block_pts, block_traces)
        done = cp
        for b, acc in enumerate(accs):
            peaks[b, ci] = np.abs(acc.snapshot().rho).max(axis=1)

    return EvolutionSeries(
        checkpoints=cps,
        peak_abs_rho=peaks,
        model=spec,
        true_key=traces.key_under_test,
    )


def _best_shift(ref_c: np.ndarray, trace_c: np.ndarray, max_shift: int) -> int:
    """Shift in [-max_shift, max_shift] maximizing cross-correlation.

    Candidates are scanned outward from 0 and only a strictly better
    score replaces the incumbent, so ties resolve toward 0.
    """
    n = ref_c.shape[0]
    best_s = 0
    best_score = -np.inf
    order = [0]
    for m in range(1, max_shift + 1):
        order.extend((-m, m))
    for s in order:
        if s >= 0:
            score = float(np.dot(ref_c[s:], trace_c[: n - s])) if s < n else -np.inf
        else:
            score = float(np.dot(ref_c[: n + s], trace_c[-s:])) if -s < n else -np.inf
        if score > best_score:
            best_score = score
            best_s = s
    return best_s


def realign(traces: TraceSet, reference_index: int, max_shift: int) -> TraceSet:
    """Align every trace to a reference by integer-sample translation.

    Each trace is shifted by the offset (within +-max_shift) that
    maximizes its cross-correlation with the reference trace; samples
    shifted in from outside the window are padded with that trace's own
    mean. Traces and plaintexts stay paired.
    """
    if max_shift < 0:
        raise ValueError("max_shift must be >= 0")
    if not 0 <= reference_index < traces.num_traces:
        raise ValueError(f"reference_index must be in [0, {traces.num_traces})")
    t = traces.traces.astype(np.float64, copy=False)
    ref_c = t[reference_index] - t[reference_index].mean()
    n = traces.samples_per_trace
    out = np.empty_like(t)
    for i in range(traces.num_traces):
        row = t[i]
        s = _best_shift(ref_c, row - row.mean(), max_shift) if max_shift else 0
        if s == 0:
            out[i] = row
        else:
            out[i] = row.mean()
            if s > 0:
                out[i, s:] = row[: n - s]
            else:
                out[i, : n + s] = row[-s:]
    return TraceSet(
        plaintexts=traces.plaintexts.copy(),
        traces=out.astype(traces.traces.dtype),
        sample_rate_hz=traces.sample_rate_hz,
        key_under_test=traces.key_under_test,
    )
