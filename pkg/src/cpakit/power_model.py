"""Leakage models: map hypothesized intermediate bytes to predicted power.

The attacker never knows the absolute scale of the device's leakage, only
its shape; these models output the Hamming weight (or Hamming distance)
of a first-round intermediate, optionally sign-flipped. The default
polarity is -1: the target's NAND flash draws slightly more current for
zero bits, so measured power falls as the Hamming weight rises.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .aes import SBOX, IntermediateTarget, first_round_intermediate

# Popcount of every byte value.
HW_TABLE = tuple(bin(x).count("1") for x in range(256))

_HW = np.array(HW_TABLE, dtype=np.float64)
_SBOX_ARR = np.array(SBOX, dtype=np.uint8)


class LeakageMetric(enum.Enum):
    HAMMING_WEIGHT = "hw"
    HAMMING_DISTANCE = "hd"


def hamming_weight(x: int) -> int:
    """Number of set bits in a byte."""
    return HW_TABLE[x & 0xFF]


def hamming_distance(a: int, b: int) -> int:
    """Number of differing bits between two bytes."""
    return HW_TABLE[(a ^ b) & 0xFF]


@dataclass(frozen=True)
class PowerModelSpec:
    """A leakage model: target intermediate, metric, and sign.

    For HAMMING_DISTANCE the distance is taken between the target
    operation's input and output bytes. Note that for the XOR target this
    degenerates to HW(k), a per-candidate constant; constant hypotheses
    carry no evidence and correlate to 0 by convention.
    """

    target: IntermediateTarget
    metric: LeakageMetric = LeakageMetric.HAMMING_WEIGHT
    polarity: int = -1

    def __post_init__(self) -> None:
        if self.polarity not in (-1, 1):
            raise ValueError(f"polarity must be +1 or -1, got {self.polarity}")

    @property
    def name(self) -> str:
        return f"{self.target.value}-{self.metric.value}"


def hypothesize(p: int, k_candidate: int, spec: PowerModelSpec) -> float:
    """Predicted leakage for plaintext byte p under key-byte candidate k."""
    out = first_round_intermediate(p, k_candidate, spec.target)
    if spec.metric is LeakageMetric.HAMMING_WEIGHT:
        value = HW_TABLE[out]
    else:
        inp = p if spec.target is IntermediateTarget.XOR_OUTPUT else (p ^ k_candidate) & 0xFF
        value = hamming_distance(inp, out)
    return float(spec.polarity * value)


def leakage_table(spec: PowerModelSpec) -> np.ndarray:
    """256-entry lookup: predicted leakage as a function of p XOR k.

    Only defined for models whose prediction depends on p and k solely
    through their XOR; the XOR-target Hamming-distance model does not
    qualify (it depends on k alone) and is rejected here.
    """
    if spec.metric is LeakageMetric.HAMMING_WEIGHT:
        if spec.target is IntermediateTarget.XOR_OUTPUT:
            table = _HW.copy()
        else:
            table = _HW[_SBOX_ARR]
    elif spec.target is IntermediateTarget.SBOX_OUTPUT:
        v = np.arange(256, dtype=np.uint8)
        table = _HW[v ^ _SBOX_ARR]
    else:
        raise ValueError("XOR-target hamming distance is not a function of p XOR k")
    return spec.polarity * table


def parse_model(name: str) -> PowerModelSpec:
    """Parse a CLI/service model name like 'sbox-hw' into a PowerModelSpec."""
    known = {
        "xor-hw": PowerModelSpec(IntermediateTarget.XOR_OUTPUT, LeakageMetric.HAMMING_WEIGHT),
        "sbox-hw": PowerModelSpec(IntermediateTarget.SBOX_OUTPUT, LeakageMetric.HAMMING_WEIGHT),
        "xor-hd": PowerModelSpec(IntermediateTarget.XOR_OUTPUT, LeakageMetric.HAMMING_DISTANCE),
        "sbox-hd": PowerModelSpec(IntermediateTarget.SBOX_OUTPUT, LeakageMetric.HAMMING_DISTANCE),
    }
    try:
        return known[name]
    except KeyError:
        raise ValueError(f"unknown power model {name!r}; expected one of {sorted(known)}") from None
