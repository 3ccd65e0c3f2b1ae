"""Request and response models shared by the HTTP service and the CLI."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

DEFAULT_SEED = 1
DEFAULT_CHECKPOINTS = [50, 100, 200, 300, 400, 500, 600]

ModelName = Literal["xor-hw", "sbox-hw", "xor-hd", "sbox-hd"]


class SimulateRequest(BaseModel):
    key: str = "random"
    plaintexts: int = Field(gt=0)
    seed: int = Field(default=DEFAULT_SEED, ge=0)
    out: str
    embed_key: bool = False
    samples: int = Field(default=2500, ge=1)
    trigger_index: int = Field(default=100, ge=0)
    byte_spacing: int = Field(default=120, ge=0)
    xor_offset: int = Field(default=0, ge=0)
    sbox_offset: int = Field(default=40, ge=0)
    leak_coeff: float = 0.01
    baseline: float = 5.0
    noise_sigma: float = Field(default=0.0, ge=0.0)
    drift_sigma: float = Field(default=0.0, ge=0.0)
    jitter_max: int = Field(default=0, ge=0)
    drop_prob: float = Field(default=0.0, ge=0.0, lt=1.0)
    repeats: int = Field(default=10, ge=1)
    no_interrupts: bool = False
    acq_delay: bool = False
    polarity: Literal[-1, 1] = -1


class SimulateResponse(BaseModel):
    out: str
    key: str
    num_records: int
    omitted_plaintexts: int
    samples_per_trace: int
    embedded_key: bool


class AttackRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    in_path: str = Field(alias="in")
    model: ModelName = "sbox-hw"
    top: int = Field(default=10, ge=1, le=256)
    realign: Optional[int] = Field(default=None, ge=0)
    threads: int = Field(default=1, ge=1)


class CandidateScore(BaseModel):
    candidate: int
    peak_abs_rho: float


class ByteTop(BaseModel):
    byte_index: int
    top: list[CandidateScore]


class GroundTruthMetrics(BaseModel):
    true_key: str
    ranks: list[int]
    rank1_count: int
    complement_rank1_count: int
    recovered: bool


class AttackResponse(BaseModel):
    best_key: str
    model: str
    num_traces: int
    per_byte: list[ByteTop]
    ground_truth: Optional[GroundTruthMetrics] = None
    verdict: Literal["recovered", "not-recovered", "no-ground-truth"]


class EvolveRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    in_path: str = Field(alias="in")
    model: ModelName = "sbox-hw"
    checkpoints: Optional[list[int]] = None
    out: str
    format: Literal["csv", "json"] = "csv"


class EvolveResponse(BaseModel):
    out: str
    format: str
    checkpoints: list[int]
    clipped: list[int]
    rows: int


class InspectRequest(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    in_path: str = Field(alias="in")


class InspectResponse(BaseModel):
    num_records: int
    samples_per_trace: int
    sample_rate_hz: float
    has_ground_truth_key: bool
    sample_mean: float
    sample_std: float
