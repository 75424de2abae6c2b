"""Validated configurations for the command-line runs.

Each subcommand owns a frozen dataclass: JSON config documents and CLI
flags are merged into it through `from_sources`, which rejects unknown keys
and validates every numeric field before any compute starts. Builders at
the bottom turn configs into grids, model parameters, and steady families.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .errors import ConfigError
from .grid import Boundary, LatticeGrid
from .model import LambdaSpec, ModelParams, OmegaSpec
from .snapshots import parse_p
from .steady import (FAMILY_DOUBLY_PERIODIC, FAMILY_ROTATING, FAMILY_TRAVELING,
                     FAMILY_TRIVIAL, SteadyState, make_doubly_periodic,
                     make_traveling_wave, make_trivial,
                     rotating_wave_continuation, solve_rotating_wave)

FAMILIES = (FAMILY_TRIVIAL, FAMILY_DOUBLY_PERIODIC, FAMILY_TRAVELING, FAMILY_ROTATING)


def load_config_file(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"config {path}: top level must be an object")
    return doc


def parse_float_list(text) -> tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    return tuple(float(tok) for tok in str(text).split(",") if tok.strip())


def parse_p_list(text) -> tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(parse_p(str(v)) for v in text)
    return tuple(parse_p(tok) for tok in str(text).split(",") if tok.strip())


def parse_int_list(text) -> tuple[int, ...]:
    """Comma list or colon range start:stop:step (stop inclusive)."""
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    text = str(text)
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (2, 3):
            raise ConfigError(f"bad range {text!r}, want start:stop[:step]")
        start, stop = int(parts[0]), int(parts[1])
        step = int(parts[2]) if len(parts) == 3 else 1
        if step <= 0 or stop < start:
            raise ConfigError(f"bad range {text!r}")
        return tuple(range(start, stop + 1, step))
    return tuple(int(tok) for tok in text.split(",") if tok.strip())


def parse_window(text) -> tuple[float, float] | None:
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        lo, hi = float(text[0]), float(text[1])
    else:
        parts = str(text).split(",")
        if len(parts) != 2:
            raise ConfigError(f"bad window {text!r}, want lo,hi")
        lo, hi = float(parts[0]), float(parts[1])
    if not (0 <= lo < hi):
        raise ConfigError(f"bad window ({lo}, {hi})")
    return (lo, hi)


@dataclass(frozen=True)
class RunConfig:
    """Shared merge/validation machinery; subclasses add fields."""

    @classmethod
    def from_sources(cls, file_cfg: dict | None = None, overrides: dict | None = None):
        names = {f.name for f in fields(cls)}
        merged: dict = {}
        for source, label in ((file_cfg, "config file"), (overrides, "flags")):
            if not source:
                continue
            unknown = sorted(set(source) - names)
            if unknown:
                raise ConfigError(f"unknown {label} keys for {cls.__name__}: {unknown}")
            for key, val in source.items():
                if val is not None:
                    merged[key] = val
        try:
            return cls(**merged)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def resolved(self) -> dict:
        return asdict(self)

    def _positive(self, *names) -> None:
        for name in names:
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive finite number, got {v!r}")

    def _check_common(self) -> None:
        if getattr(self, "K", 1) < 1 or int(getattr(self, "K", 1)) != getattr(self, "K", 1):
            raise ConfigError(f"K must be a positive integer, got {getattr(self, 'K')!r}")
        boundary = getattr(self, "boundary", None)
        if boundary is not None and boundary not in (b.value for b in Boundary):
            raise ConfigError(f"boundary must be one of "
                              f"{[b.value for b in Boundary]}, got {boundary!r}")
        if getattr(self, "lam", "cubic") != "cubic":
            raise ConfigError("only the cubic amplitude nonlinearity is configurable; "
                              "other polynomials are library-level")
        alpha = getattr(self, "alpha", 0.0)
        if alpha is not None and (not math.isfinite(alpha) or alpha < 0):
            raise ConfigError(f"alpha must be finite and >= 0, got {alpha!r}")


@dataclass(frozen=True)
class SteadyConfig(RunConfig):
    family: str = FAMILY_TRIVIAL
    alpha: float = 0.1
    K: int = 8
    boundary: str | None = None
    lam: str = "cubic"
    omega0: float = 1.0
    n_i: int = 6
    n_j: int = 6
    out: str | None = None

    def __post_init__(self):
        self._check_common()
        if self.family not in FAMILIES:
            raise ConfigError(f"family must be one of {list(FAMILIES)}, "
                              f"got {self.family!r}")
        self._positive("omega0", "n_i", "n_j")


@dataclass(frozen=True)
class SimulateConfig(RunConfig):
    state: str = ""
    out: str = ""
    t_max: float = 1.0
    dt: float | None = None
    alpha: float | None = None
    lam: str = "cubic"
    omega0: float = 1.0
    form: str = "complex"
    frame: str = "corotating"

    def __post_init__(self):
        self._check_common()
        if not self.state or not self.out:
            raise ConfigError("simulate needs both 'state' (input snapshot) and 'out'")
        self._positive("t_max", "omega0")
        if self.dt is not None:
            self._positive("dt")
        if self.form not in ("complex", "polar"):
            raise ConfigError(f"form must be 'complex' or 'polar', got {self.form!r}")
        if self.frame not in ("corotating", "lab"):
            raise ConfigError(f"frame must be 'corotating' or 'lab', got {self.frame!r}")


@dataclass(frozen=True)
class SemigroupConfig(RunConfig):
    kind: str = "plain"
    d1: float = 1.0
    d2: float = 1.0
    K: int = 256
    boundary: str = "periodic"
    state: str | None = None
    family: str | None = None
    alpha: float = 0.1
    lam: str = "cubic"
    omega0: float = 1.0
    data: str = "delta"
    width: float = 3.0
    t_max: float = 200.0
    t_min: float | None = None
    n_samples: int = 25
    p_list: tuple = (1.0, 2.0, math.inf)
    window: tuple | None = None
    dt: float | None = None
    out: str | None = None

    def __post_init__(self):
        self._check_common()
        if self.kind not in ("plain", "cosine", "ratio_cosine"):
            raise ConfigError(f"kind must be plain/cosine/ratio_cosine, got {self.kind!r}")
        if self.kind != "plain" and not (self.state or self.family):
            raise ConfigError(f"kind {self.kind!r} needs a steady state "
                              "('state' snapshot or 'family')")
        if self.data not in ("delta", "bump"):
            raise ConfigError(f"data must be 'delta' or 'bump', got {self.data!r}")
        self._positive("t_max", "width", "omega0")
        if self.t_min is not None:
            self._positive("t_min")
        if self.n_samples < 2:
            raise ConfigError("n_samples must be >= 2")
        object.__setattr__(self, "p_list", parse_p_list(self.p_list))
        if any(p < 1 for p in self.p_list):
            raise ConfigError("p values must be >= 1")
        object.__setattr__(self, "window", parse_window(self.window))
        if self.dt is not None:
            self._positive("dt")


@dataclass(frozen=True)
class ScanConfig(RunConfig):
    family: str = FAMILY_ROTATING
    alpha_list: tuple = (0.1, 0.5, 1.0)
    p_list: tuple = (1.0, 5.0)
    N_list: tuple = tuple(range(10, 201, 10))
    boundary: str = "neumann"
    lam: str = "cubic"
    omega0: float = 1.0
    background: float = 1.0
    out: str | None = None

    def __post_init__(self):
        self._check_common()
        if self.family not in FAMILIES:
            raise ConfigError(f"family must be one of {list(FAMILIES)}")
        object.__setattr__(self, "alpha_list", parse_float_list(self.alpha_list))
        object.__setattr__(self, "p_list", parse_p_list(self.p_list))
        object.__setattr__(self, "N_list", parse_int_list(self.N_list))
        if not self.alpha_list or any(a < 0 for a in self.alpha_list):
            raise ConfigError("alpha_list must be nonempty, entries >= 0")
        if not self.p_list or any(p < 1 or math.isinf(p) for p in self.p_list):
            raise ConfigError("p_list must be nonempty finite values >= 1")
        if not self.N_list or any(n < 4 or n % 2 for n in self.N_list):
            raise ConfigError("N_list entries must be even and >= 4")
        self._positive("omega0", "background")


@dataclass(frozen=True)
class AttractConfig(RunConfig):
    family: str = FAMILY_TRIVIAL
    alpha: float = 0.05
    delta: float = 0.01
    K: int = 16
    boundary: str = "periodic"
    lam: str = "cubic"
    omega0: float = 1.0
    n_i: int = 6
    n_j: int = 6
    t_max: float = 5.0
    n_samples: int = 30
    window: tuple | None = None
    out: str | None = None

    def __post_init__(self):
        self._check_common()
        if self.family not in FAMILIES:
            raise ConfigError(f"family must be one of {list(FAMILIES)}")
        if self.delta < 0:
            raise ConfigError("delta must be >= 0")
        self._positive("t_max", "omega0")
        if self.n_samples < 8:
            raise ConfigError("n_samples must be >= 8")
        object.__setattr__(self, "window", parse_window(self.window))


@dataclass(frozen=True)
class PhaseDecayConfig(RunConfig):
    family: str = FAMILY_TRIVIAL
    alpha: float = 0.1
    eps: float = 0.1
    K: int = 256
    boundary: str = "periodic"
    lam: str = "cubic"
    omega0: float = 1.0
    n_i: int = 6
    n_j: int = 6
    tau_max: float = 25.0
    p_list: tuple = (1.0, 2.0, 4.0, math.inf)
    rho0_scale: float = 0.0
    gauge: bool = False
    n_samples: int = 30
    q_star: float = math.inf
    window: tuple | None = None
    out: str | None = None

    def __post_init__(self):
        self._check_common()
        if self.family not in FAMILIES:
            raise ConfigError(f"family must be one of {list(FAMILIES)}")
        self._positive("eps", "tau_max", "omega0")
        if self.alpha <= 0:
            raise ConfigError("phase decay needs alpha > 0")
        if self.rho0_scale < 0:
            raise ConfigError("rho0_scale must be >= 0")
        if self.n_samples < 8:
            raise ConfigError("n_samples must be >= 8")
        object.__setattr__(self, "p_list", parse_p_list(self.p_list))
        if any(p < 1 for p in self.p_list):
            raise ConfigError("p values must be >= 1")
        qs = parse_p(str(self.q_star)) if isinstance(self.q_star, str) else float(self.q_star)
        if qs < 1:
            raise ConfigError("q_star must be >= 1 (inf allowed)")
        object.__setattr__(self, "q_star", qs)
        object.__setattr__(self, "window", parse_window(self.window))


@dataclass(frozen=True)
class RotationConfig(RunConfig):
    alpha: float | None = None
    K: int = 50
    boundary: str = "neumann"
    lam: str = "cubic"
    omega0: float = 1.0
    state: str | None = None
    base_times: tuple = (0.0, 0.5)
    out: str | None = None

    def __post_init__(self):
        self._check_common()
        self._positive("omega0")
        object.__setattr__(self, "base_times", parse_float_list(self.base_times))
        if any(t < 0 for t in self.base_times):
            raise ConfigError("base_times must be >= 0")


def default_boundary(family: str) -> str:
    return "neumann" if family == FAMILY_ROTATING else "periodic"


def build_grid(K: int, boundary: str) -> LatticeGrid:
    return LatticeGrid(int(K), Boundary(boundary))


def build_params(grid: LatticeGrid, alpha: float, omega0: float = 1.0) -> ModelParams:
    return ModelParams(alpha=float(alpha), lam=LambdaSpec.cubic(),
                       omega=OmegaSpec.constant(float(omega0)), grid=grid)


def build_family(family: str, params: ModelParams, n_i: int = 6, n_j: int = 6
                 ) -> SteadyState:
    """Construct a steady family; rotating waves above small alpha go through
    continuation from the seeded small-alpha branch."""
    if family == FAMILY_TRIVIAL:
        return make_trivial(params)
    if family == FAMILY_DOUBLY_PERIODIC:
        return make_doubly_periodic(params, n_i, n_j)
    if family == FAMILY_TRAVELING:
        return make_traveling_wave(params, n_i)
    if family == FAMILY_ROTATING:
        if params.alpha <= 0.15:
            return solve_rotating_wave(params)
        return rotating_wave_continuation(params, [params.alpha])[params.alpha]
    raise ConfigError(f"unknown family {family!r}")
