"""The TraceSet container: paired plaintexts and power traces.

A trace never travels without its plaintext; every operation in the
toolkit consumes and produces whole records, so mispairing (the classic
acquisition failure when captures go missing) is structurally impossible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .aes import BLOCK_SIZE, check_block

DEFAULT_SAMPLE_RATE_HZ = 2.5e9

# Samples are stored as binary32, the same representation the trace file
# format uses, so persistence round-trips are bit-exact. Analysis promotes
# to binary64.
SAMPLE_DTYPE = np.float32


@dataclass
class TraceSet:
    """Paired (plaintext, trace) records plus acquisition metadata.

    plaintexts: (N, 16) uint8 array.
    traces: (N, samples_per_trace) float array, one row per record.
    key_under_test: simulation ground truth; None for real captures.
    """

    plaintexts: np.ndarray
    traces: np.ndarray
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ
    key_under_test: bytes | None = field(default=None)

    def __post_init__(self) -> None:
        self.plaintexts = np.ascontiguousarray(self.plaintexts, dtype=np.uint8)
        self.traces = np.ascontiguousarray(self.traces)
        if self.plaintexts.ndim != 2 or self.plaintexts.shape[1] != BLOCK_SIZE:
            raise ValueError(f"plaintexts must have shape (N, {BLOCK_SIZE})")
        if self.traces.ndim != 2:
            raise ValueError("traces must be a 2-D array (records x samples)")
        if self.plaintexts.shape[0] != self.traces.shape[0]:
            raise ValueError(
                f"{self.plaintexts.shape[0]} plaintexts but {self.traces.shape[0]} traces"
            )
        if self.key_under_test is not None:
            self.key_under_test = check_block(self.key_under_test, "key_under_test")

    @property
    def num_traces(self) -> int:
        return self.traces.shape[0]

    @property
    def samples_per_trace(self) -> int:
        return self.traces.shape[1]

    def plaintext(self, index: int) -> bytes:
        return bytes(self.plaintexts[index])

    def head(self, n: int) -> "TraceSet":
        """The first n records as a new TraceSet (views, not copies)."""
        return TraceSet(
            plaintexts=self.plaintexts[:n],
            traces=self.traces[:n],
            sample_rate_hz=self.sample_rate_hz,
            key_under_test=self.key_under_test,
        )
