"""Scenario configuration for the command-line runner.

A scenario is one JSON document. Unknown keys are rejected everywhere, and
`ScenarioConfig.model_json_schema()` is what ``docs/config.schema.json``
publishes. With ``units.system = "SI"`` lengths are metres, times seconds,
masses kilograms and momenta kg m/s. `to_natural` converts them once into
c = hbar = 1 units whose length unit is ``units.length_unit_m`` (by default
the reduced Compton length of the field), and `UnitScale` converts results
back.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from scipy import constants

from .profiles import profile_from_dict
from .states import FieldKind, MomentumAmplitude, Term

C_LIGHT = constants.c
HBAR = constants.hbar

MASS_MAX = 1.0e6
Vec3 = tuple[float, float, float]

# profile parameters carrying a unit, by kind; everything else is dimensionless
_MOMENTUM_KEYS = {"width", "center", "scale"}
_LENGTH_KEYS = {"shift", "a"}


class ConfigError(ValueError):
    """Invalid scenario; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class FieldCfg(_Strict):
    kind: Literal["scalar", "dirac", "photon"] = "scalar"
    mass: float = Field(1.0, ge=0.0, description="natural units, or kg under SI")

    @model_validator(mode="after")
    def _photon_massless(self):
        if self.kind == "photon" and self.mass != 0.0:
            raise ValueError("photon mass must be 0")
        return self


class StateCfg(_Strict):
    family: Literal["gaussian", "exp_energy", "power_law"]
    parameters: dict[str, Any] = Field(default_factory=dict)
    polarization: list[tuple[float, float]] | None = Field(
        None, description="spin or helicity coefficients as [re, im] pairs"
    )
    label: str = ""


class PairCfg(_Strict):
    recipe: Literal["given", "gram_schmidt"] = "gram_schmidt"


class UnitsCfg(_Strict):
    system: Literal["natural", "SI"] = "natural"
    length_unit_m: Literal["compton"] | float = Field(
        "compton",
        description="SI only: internal length unit in metres; 'compton' uses hbar/(m c) of field.mass",
    )

    @field_validator("length_unit_m")
    @classmethod
    def _positive(cls, v):
        if v != "compton" and not v > 0:
            raise ValueError("length_unit_m must be positive")
        return v


class SupportCfg(_Strict):
    kind: Literal["state", "interval", "ball", "points"] = "state"
    eps: float = Field(1e-3, gt=0.0, lt=1.0)
    interval: tuple[float, float] | None = None
    center: Vec3 | None = None
    radius: float | None = Field(None, ge=0.0)
    points: list[Vec3] | None = None

    @model_validator(mode="after")
    def _complete(self):
        need = {"interval": ("interval",), "ball": ("center", "radius"), "points": ("points",)}
        for key in need.get(self.kind, ()):
            if getattr(self, key) is None:
                raise ValueError(f"support kind {self.kind!r} needs {key!r}")
        if self.interval is not None and not self.interval[0] <= self.interval[1]:
            raise ValueError("interval must be [left, right] with left <= right")
        if self.points is not None and not self.points:
            raise ValueError("points must be nonempty")
        return self


class TGridCfg(_Strict):
    values: list[float] | None = None
    start: float = Field(0.0, ge=0.0)
    stop: float | None = Field(None, gt=0.0)
    num: int = Field(20, ge=2, le=1000)

    @field_validator("values")
    @classmethod
    def _ascending(cls, v):
        if v is not None:
            if not v or any(t < 0 for t in v) or any(b < a for a, b in zip(v, v[1:])):
                raise ValueError("values must be nonempty, nonnegative and ascending")
        return v


class ProtocolCfg(_Strict):
    rounds: int = Field(100_000, ge=1, le=10**9)
    seed: int = Field(0, ge=0)
    policy: Literal["discard", "error"] = "discard"
    T: float | None = Field(None, ge=0.0, description="access time; default is the last T grid point")


class KernelCfg(_Strict):
    mass: float = Field(1.0, ge=0.0)
    lambda2: list[float] = Field(default_factory=lambda: [-4.0, -1.0, 1.0, 4.0])
    sign: Literal["plus", "minus", "sum"] = "plus"
    x0_sign: Literal[-1, 1] = 1


class CoverCfg(_Strict):
    betas: list[float] = Field(default_factory=lambda: [0.0, 0.5, 0.9, 0.99, 0.999])

    @field_validator("betas")
    @classmethod
    def _subluminal(cls, v):
        if any(not abs(b) < 1.0 for b in v):
            raise ValueError("every beta must satisfy |beta| < 1")
        return v


class OutputCfg(_Strict):
    dir: str | None = None
    format: Literal["csv", "json", "both"] = "both"


class ScenarioConfig(_Strict):
    field: FieldCfg = Field(default_factory=FieldCfg)
    states: list[StateCfg] = Field(default_factory=list)
    pair: PairCfg = Field(default_factory=PairCfg)
    measure: Literal["lorentz", "galilean"] = "lorentz"
    units: UnitsCfg = Field(default_factory=UnitsCfg)
    support: SupportCfg = Field(default_factory=SupportCfg)
    observer: Literal["auto"] | Vec3 = "auto"
    T_grid: TGridCfg = Field(default_factory=TGridCfg)
    protocol: ProtocolCfg = Field(default_factory=ProtocolCfg)
    kernel: KernelCfg = Field(default_factory=KernelCfg)
    covertime: CoverCfg = Field(default_factory=CoverCfg)
    output: OutputCfg = Field(default_factory=OutputCfg)

    @property
    def si(self) -> bool:
        return self.units.system == "SI"


# ---------------------------------------------------------------- loading


def format_validation_error(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        path = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{path}: {e['msg']}")
    return "; ".join(lines)


def load_config(source) -> ScenarioConfig:
    """Parse a path, JSON text or dict. Raises `ConfigError` on any problem."""
    if isinstance(source, dict):
        doc = source
    else:
        text = str(source)
        if not text.lstrip().startswith("{"):
            try:
                with open(text, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError("--config", f"cannot read {source}: {exc.strerror}") from exc
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("<root>", f"invalid JSON: {exc}") from exc
    try:
        cfg = ScenarioConfig.model_validate(doc)
    except ValidationError as exc:
        raise ConfigError("", format_validation_error(exc)) from exc
    check_bounds(to_natural(cfg))
    return cfg


def config_schema() -> dict:
    return ScenarioConfig.model_json_schema()


# ---------------------------------------------------------------- units


@dataclass(frozen=True)
class UnitScale:
    """SI <-> internal conversion with internal length unit ``length_m`` metres.

    Internally c = hbar = 1 and lengths are measured in ``length_m``; with
    ``si=False`` every conversion is the identity.
    """

    si: bool = False
    length_m: float = 1.0

    def length_in(self, x):
        return _map(x, 1.0 / self.length_m) if self.si else x

    def length_out(self, x):
        return _map(x, self.length_m) if self.si else x

    def area_in(self, x):
        return _map(x, self.length_m**-2) if self.si else x

    def area_out(self, x):
        return _map(x, self.length_m**2) if self.si else x

    def inv_area_out(self, x):
        return _map(x, self.length_m**-2) if self.si else x

    def time_in(self, t):
        return _map(t, C_LIGHT / self.length_m) if self.si else t

    def time_out(self, t):
        return _map(t, self.length_m / C_LIGHT) if self.si else t

    def rate_out(self, k):
        """Per-time quantity (a slope in T) back to 1/s."""
        return _map(k, C_LIGHT / self.length_m) if self.si else k

    def mass_in(self, m_kg):
        return _map(m_kg, C_LIGHT * self.length_m / HBAR) if self.si else m_kg

    def momentum_in(self, p):
        return _map(p, self.length_m / HBAR) if self.si else p


def _map(x, f):
    if x is None:
        return None
    if isinstance(x, (list, tuple)):
        return [_map(v, f) for v in x]
    if isinstance(x, np.ndarray):
        return x * f
    return float(x) * f


def unit_scale(cfg: ScenarioConfig) -> UnitScale:
    if not cfg.si:
        return UnitScale()
    L0 = cfg.units.length_unit_m
    if L0 == "compton":
        explicit = "mass" in cfg.field.model_fields_set
        m = cfg.field.mass if cfg.field.kind != "photon" and explicit else 0.0
        L0 = HBAR / (m * C_LIGHT) if m > 0 else 1.0
    return UnitScale(True, float(L0))


def _scale_param(key: str, value, sc: UnitScale):
    if key in _MOMENTUM_KEYS:
        return sc.momentum_in(value)
    if key in _LENGTH_KEYS:
        return sc.length_in(value)
    return value


def to_natural(cfg: ScenarioConfig) -> ScenarioConfig:
    """Copy of ``cfg`` with every dimensional quantity in internal units."""
    if not cfg.si:
        return cfg
    if cfg.states and cfg.field.kind != "photon" and "mass" not in cfg.field.model_fields_set:
        raise ConfigError("field.mass", "must be given explicitly (in kg) when units.system is SI")
    sc = unit_scale(cfg)
    doc = cfg.model_dump()
    doc["units"] = {"system": "natural", "length_unit_m": 1.0}
    doc["field"]["mass"] = sc.mass_in(cfg.field.mass)
    doc["kernel"]["mass"] = sc.mass_in(cfg.kernel.mass)
    doc["kernel"]["lambda2"] = sc.area_in(cfg.kernel.lambda2)
    for st in doc["states"]:
        st["parameters"] = {k: _scale_param(k, v, sc) for k, v in st["parameters"].items()}
    sup = doc["support"]
    for key in ("interval", "center", "radius", "points"):
        sup[key] = sc.length_in(sup[key])
    if doc["observer"] != "auto":
        doc["observer"] = sc.length_in(doc["observer"])
    tg = doc["T_grid"]
    tg["values"] = sc.time_in(tg["values"])
    tg["start"] = sc.time_in(tg["start"])
    tg["stop"] = sc.time_in(tg["stop"])
    doc["protocol"]["T"] = sc.time_in(doc["protocol"]["T"])
    try:
        return ScenarioConfig.model_validate(doc)
    except ValidationError as exc:
        raise ConfigError("", format_validation_error(exc)) from exc


def check_bounds(cfg: ScenarioConfig) -> None:
    """Range checks that need natural units."""
    if cfg.states and not cfg.field.mass <= MASS_MAX:
        raise ConfigError("field.mass", f"must be <= {MASS_MAX:g} in natural units")
    for v in cfg.kernel.lambda2:
        if not math.isfinite(v):
            raise ConfigError("kernel.lambda2", "entries must be finite")
    for i in range(len(cfg.states)):
        build_state(cfg, i)


def build_state(cfg: ScenarioConfig, index: int) -> MomentumAmplitude:
    """Momentum amplitude for ``cfg.states[index]`` (``cfg`` in natural units)."""
    st = cfg.states[index]
    path = f"states.{index}"
    try:
        prof = profile_from_dict({"family": st.family, "parameters": st.parameters})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}.parameters", str(exc)) from exc
    kind = cfg.field.kind
    if kind == "scalar":
        if st.polarization is not None:
            raise ConfigError(f"{path}.polarization", "scalar states take no polarization")
        spin = ()
    else:
        pol = st.polarization or [(1.0, 0.0), (0.0, 0.0)]
        if len(pol) != 2:
            raise ConfigError(f"{path}.polarization", "needs exactly two [re, im] coefficients")
        spin = tuple(complex(re, im) for re, im in pol)
        if not any(spin):
            raise ConfigError(f"{path}.polarization", "must not be all zero")
    try:
        field_kind = FieldKind(kind, cfg.field.mass)
    except ValueError as exc:
        raise ConfigError("field", str(exc)) from exc
    return MomentumAmplitude(field_kind, (Term(1.0, prof, spin),), st.label or f"state{index}")
