"""Schemas of the JSON reports written by the command-line runner."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict

Units = Literal["natural", "SI"]


class _Report(BaseModel):
    model_config = ConfigDict(extra="forbid")


class OverlapReport(_Report):
    command: Literal["overlap"]
    units: Units
    length_unit_m: float | None
    field: dict
    measure: str
    labels: list[str]
    states: list[dict]
    gram_re: list[list[float]]
    gram_im: list[list[float]]
    gram_error: float
    orthonormal: bool
    outcome_matrix: list[list[float]] | None
    max_deviation: float | None


class KernelRow(_Report):
    lambda2: float
    interior_re: float | None
    interior_im: float | None
    exterior_re: float | None
    exterior_im: float | None
    cone_delta_coeff: float
    asymptotic_ratio: float | None


class KernelReport(_Report):
    command: Literal["kernel"]
    units: Units
    length_unit_m: float | None
    mass: float
    sign: str
    x0_sign: int
    rows: list[KernelRow]


class FrameRow(_Report):
    beta: float
    t_prime: float
    t_original: float


class CoverageReport(_Report):
    command: Literal["covertime"]
    units: Units
    length_unit_m: float | None
    support: dict
    t_min: float
    observer: list[float]
    certificate: list[list[float]]
    eps: float | None
    length: float
    frame_table: list[FrameRow]
    t_original_spread: float


class DistinguishRow(_Report):
    T: float
    ReG11: float
    ReG22: float
    ReG12: float
    ImG12: float
    C11: float
    C12: float
    C21: float
    C22: float
    eps: float
    floor_flag: bool


class FitDoc(_Report):
    slope: float
    intercept: float
    r_squared: float
    window: list[float]


class DistinguishDoc(_Report):
    command: Literal["distinguish"]
    units: Units
    length_unit_m: float | None
    labels: list[str]
    observer: list[float]
    floor: float
    engine: str
    rows: list[DistinguishRow]
    inconclusive: list[list[float]]
    clipped: list[bool]
    fit: FitDoc | None


class Counts(_Report):
    correct: int
    wrong: int
    inconclusive: int


class ProtocolReport(_Report):
    command: Literal["protocol"]
    units: Units
    length_unit_m: float | None
    rounds: int
    counts: Counts
    qber: float | None
    ci: list[float] | None
    sigma: float | None
    analytic_qber: float | None
    policy: str
    seed: int
    degenerate: bool
    note: str
    T: float
    observer: list[float]
    confusion: list[list[float]]


SCHEMAS = {
    "overlap": OverlapReport,
    "kernel": KernelReport,
    "covertime": CoverageReport,
    "distinguish": DistinguishDoc,
    "protocol": ProtocolReport,
}


def report_schemas() -> dict:
    """JSON Schemas of every report, keyed by command (``docs/report.schema.json``)."""
    return {name: model.model_json_schema() for name, model in SCHEMAS.items()}
