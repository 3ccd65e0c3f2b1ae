"""Bit-exact persistence of TraceSets and export of evolution series.

File layout (all little-endian):

    magic              8 bytes   "CPATRC01"
    version            uint16    currently 1
    num_records        uint32
    samples_per_trace  uint32
    sample_rate_hz     float64
    flags              uint16    bit 0: ground-truth key present
    [key]              16 bytes  only when flags bit 0 is set
    records            num_records x (16 plaintext bytes +
                                      samples_per_trace float32 samples)

Samples are binary32 on disk and in the TraceSet, so a write/read
round-trip reproduces every bit.
"""

from __future__ import annotations

import csv
import json
import struct
from pathlib import Path
from typing import BinaryIO, TextIO, Union

import numpy as np

from .aes import BLOCK_SIZE
from .engine import NUM_CANDIDATES, EvolutionSeries
from .traceset import SAMPLE_DTYPE, TraceSet

MAGIC = b"CPATRC01"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<8sHIIdH")
_FLAG_KEY_PRESENT = 0x0001

PathOrFile = Union[str, Path, BinaryIO]


class TraceFormatError(ValueError):
    """A trace file violates the format contract."""


class BadMagicError(TraceFormatError):
    pass


class UnsupportedVersionError(TraceFormatError):
    pass


class TruncatedFileError(TraceFormatError):
    pass


def file_size(num_records: int, samples_per_trace: int, key_present: bool) -> int:
    """Exact on-disk size in bytes of a trace file with these dimensions."""
    header = _HEADER.size + (BLOCK_SIZE if key_present else 0)
    return header + num_records * (BLOCK_SIZE + 4 * samples_per_trace)


def write_traceset(ts: TraceSet, destination: PathOrFile) -> None:
    """Write a TraceSet; embeds the ground-truth key when present."""
    if ts.num_traces == 0:
        raise ValueError("refusing to write an empty trace set")
    flags = _FLAG_KEY_PRESENT if ts.key_under_test is not None else 0
    header = _HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        ts.num_traces,
        ts.samples_per_trace,
        float(ts.sample_rate_hz),
        flags,
    )
    samples = np.ascontiguousarray(ts.traces, dtype=SAMPLE_DTYPE)

    def _emit(f: BinaryIO) -> None:
        f.write(header)
        if ts.key_under_test is not None:
            f.write(ts.key_under_test)
        for i in range(ts.num_traces):
            f.write(ts.plaintexts[i].tobytes())
            f.write(samples[i].tobytes())

    if isinstance(destination, (str, Path)):
        with open(destination, "wb") as f:
            _emit(f)
    else:
        _emit(destination)


def read_traceset(source: PathOrFile) -> TraceSet:
    """Read a trace file, validating magic, version, counts, and length."""
    if isinstance(source, (str, Path)):
        with open(source, "rb") as f:
            data = f.read()
    else:
        data = source.read()

    if len(data) < _HEADER.size:
        if data[: len(MAGIC)] != MAGIC[: len(data)]:
            raise BadMagicError("not a CPATRC01 trace file (bad magic)")
        raise TruncatedFileError(f"file ends inside the {_HEADER.size}-byte header")
    magic, version, num_records, samples_per_trace, sample_rate_hz, flags = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BadMagicError(f"not a CPATRC01 trace file (magic {magic!r})")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"unsupported trace file version {version}")

    offset = _HEADER.size
    key = None
    if flags & _FLAG_KEY_PRESENT:
        if len(data) < offset + BLOCK_SIZE:
            raise TruncatedFileError("file ends inside the embedded key")
        key = data[offset : offset + BLOCK_SIZE]
        offset += BLOCK_SIZE

    record_size = BLOCK_SIZE + 4 * samples_per_trace
    payload = len(data) - offset
    if payload < num_records * record_size:
        raise TruncatedFileError(
            f"file truncated inside record {payload // record_size} "
            f"of {num_records} declared records"
        )
    if payload > num_records * record_size:
        raise TraceFormatError(
            f"{payload - num_records * record_size} trailing bytes after "
            f"the {num_records} declared records"
        )

    record_dtype = np.dtype(
        [("plaintext", np.uint8, BLOCK_SIZE), ("samples", "<f4", samples_per_trace)]
    )
    records = np.frombuffer(data, dtype=record_dtype, count=num_records, offset=offset)
    return TraceSet(
        plaintexts=records["plaintext"].copy(),
        traces=records["samples"].copy(),
        sample_rate_hz=sample_rate_hz,
        key_under_test=key,
    )


_EVOLUTION_FORMATS = ("csv", "json")


def _evolution_rows(series: EvolutionSeries):
    has_key = series.true_key is not None
    for b in range(series.peak_abs_rho.shape[0]):
        for ci, cp in enumerate(series.checkpoints):
            peaks = series.peak_abs_rho[b, ci]
            for cand in range(NUM_CANDIDATES):
                row = {
                    "byte_index": b,
                    "trace_count": cp,
                    "candidate": cand,
                    "peak_abs_rho": float(peaks[cand]),
                }
                if has_key:
                    row["is_true_key"] = cand == series.true_key[b]
                yield row


def export_evolution(series: EvolutionSeries, destination, fmt: str = "csv") -> int:
    """Write the data behind a correlation-evolution plot.

    One row per (byte, checkpoint, candidate); returns the row count.
    Floats are written with shortest round-tripping decimal form.
    """
    if fmt not in _EVOLUTION_FORMATS:
        raise ValueError(f"format must be one of {_EVOLUTION_FORMATS}, got {fmt!r}")
    if not series.checkpoints:
        raise ValueError("evolution series has no checkpoints")

    rows = list(_evolution_rows(series))
    if isinstance(destination, (str, Path)):
        with open(destination, "w", newline="") as f:
            _emit_evolution(rows, f, fmt, series.true_key is not None)
    else:
        _emit_evolution(rows, destination, fmt, series.true_key is not None)
    return len(rows)


def _emit_evolution(rows: list[dict], f: TextIO, fmt: str, has_key: bool) -> None:
    if fmt == "json":
        json.dump(rows, f)
        return
    fields = ["byte_index", "trace_count", "candidate", "peak_abs_rho"]
    if has_key:
        fields.append("is_true_key")
    writer = csv.writer(f)
    writer.writerow(fields)
    for row in rows:
        out = [row["byte_index"], row["trace_count"], row["candidate"], repr(row["peak_abs_rho"])]
        if has_key:
            out.append(int(row["is_true_key"]))
        writer.writerow(out)
