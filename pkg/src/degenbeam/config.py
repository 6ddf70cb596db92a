"""Experiment configuration: YAML in, validated dataclasses out.

Unknown keys are rejected and every error names the offending field by its
dotted path, e.g. ``solver.rtol``. ``to_dict`` produces plain data that
parses back to an equal config.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import re
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml

from .diagnostics import ModelContext
from .galerkin import InitialData
from .integrator import SolverConfig
from .model import ModelParams, Nonlinearity, check_assumptions
from .spectral import DomainSpec, build_spectrum


class ConfigError(ValueError):
    """Invalid configuration; ``path`` is the dotted name of the bad field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


DIAGNOSTICS = ("smoothing", "lowerbound", "dependence", "absorb", "tail", "decay")


@dataclass(frozen=True)
class SmoothingConfig:
    t_min: float = 0.1
    n_list: tuple[int, ...] = ()


@dataclass(frozen=True)
class LowerBoundConfig:
    pass


@dataclass(frozen=True)
class DependenceConfig:
    epsilon: float = 1e-6
    mode: int = 1
    ladder: tuple[float, ...] = ()


@dataclass(frozen=True)
class AbsorbConfig:
    size: int = 32
    norm_range: tuple[float, float] = (1.0, 10.0)
    radii: tuple[float, ...] = (0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0)
    seed: int = 0


@dataclass(frozen=True)
class TailConfig:
    epsilon: float = 1e-2
    m_list: Optional[tuple[int, ...]] = None
    t0: Optional[float] = None


@dataclass(frozen=True)
class DecayConfig:
    tolerance: Optional[float] = None


@dataclass(frozen=True)
class DiagnosticsConfig:
    """Each present section switches that diagnostic on."""

    smoothing: Optional[SmoothingConfig] = None
    lowerbound: Optional[LowerBoundConfig] = None
    dependence: Optional[DependenceConfig] = None
    absorb: Optional[AbsorbConfig] = None
    tail: Optional[TailConfig] = None
    decay: Optional[DecayConfig] = None


@dataclass(frozen=True)
class ExperimentConfig:
    domain: DomainSpec = field(default_factory=lambda: DomainSpec(1, (math.pi,)))
    n_modes: int = 32
    params: ModelParams = field(default_factory=ModelParams)
    nonlinearity: tuple[float, ...] = (0.0,)
    initial: InitialData = field(default_factory=InitialData)
    t_end: float = 10.0
    solver: SolverConfig = field(default_factory=SolverConfig)
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)
    output: str = "out"
    override_assumptions: bool = False

    @property
    def f(self) -> Nonlinearity:
        return Nonlinearity(self.nonlinearity)

    def context(self) -> ModelContext:
        return ModelContext(self.domain, self.params, self.f, self.solver)

    def to_dict(self) -> dict:
        return _dump(self)

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def with_seed(self, seed: int) -> "ExperimentConfig":
        """Override every seed (initial datum and ensemble) with ``seed``."""
        diag = self.diagnostics
        if diag.absorb is not None:
            diag = dataclasses.replace(diag, absorb=dataclasses.replace(diag.absorb, seed=seed))
        return dataclasses.replace(
            self, initial=dataclasses.replace(self.initial, seed=seed), diagnostics=diag
        )


# --------------------------------------------------------------------------
# generic dataclass (de)serialisation


_PI_RE = re.compile(r"^\s*([-+0-9.eE]*)\s*\*?\s*pi\s*(?:/\s*([-+0-9.eE]+))?\s*$")


def _length(value: Any, path: str) -> float:
    """A number, or a string such as ``pi``, ``2*pi``, ``pi/2``."""
    if isinstance(value, str):
        m = _PI_RE.match(value)
        if not m:
            raise ConfigError(path, f"cannot read length {value!r}")
        num = float(m.group(1)) if m.group(1) not in ("", "+", "-") else float(m.group(1) + "1")
        den = float(m.group(2)) if m.group(2) else 1.0
        return num * math.pi / den
    return _scalar(float, value, path)


def _scalar(tp, value: Any, path: str):
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected true/false, got {value!r}")
        return value
    if isinstance(value, bool):
        raise ConfigError(path, f"expected {tp.__name__}, got a boolean")
    if tp is int:
        if isinstance(value, float) and value.is_integer():
            return int(value)
        if isinstance(value, int):
            return value
        raise ConfigError(path, f"expected an integer, got {value!r}")
    if tp is float:
        try:
            # YAML 1.1 reads "1e-9" as a string
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(path, f"expected a number, got {value!r}") from None
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    raise TypeError(tp)


def _coerce(tp, value: Any, path: str):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin is typing.Union:
        inner = [a for a in args if a is not type(None)]
        if value is None:
            return None
        return _coerce(inner[0], value, path)
    if origin is tuple:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(path, f"expected a list, got {value!r}")
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_coerce(args[0], v, f"{path}[{i}]") for i, v in enumerate(value))
        if len(value) != len(args):
            raise ConfigError(path, f"expected {len(args)} entries, got {len(value)}")
        return tuple(_coerce(a, v, f"{path}[{i}]") for i, (a, v) in enumerate(zip(args, value)))
    if dataclasses.is_dataclass(tp):
        return _load(tp, value, path)
    return _scalar(tp, value, path)


def _load(cls, data: Any, path: str = ""):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(path, f"expected a mapping, got {data!r}")
    hints = typing.get_type_hints(cls)
    names = [f.name for f in dataclasses.fields(cls) if f.init]
    unknown = sorted(set(data) - set(names))
    if unknown:
        where = f"{path}.{unknown[0]}" if path else str(unknown[0])
        raise ConfigError(where, f"unknown key (allowed: {', '.join(names)})")
    kwargs = {}
    for name in names:
        if name not in data:
            continue
        sub = f"{path}.{name}" if path else name
        if cls is DomainSpec and name == "lengths":
            raw = data[name] if isinstance(data[name], (list, tuple)) else [data[name]]
            kwargs[name] = tuple(_length(v, f"{sub}[{i}]") for i, v in enumerate(raw))
        else:
            kwargs[name] = _coerce(hints[name], data[name], sub)
    if cls is DomainSpec and "dim" not in kwargs and "lengths" in kwargs:
        kwargs["dim"] = len(kwargs["lengths"])
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(path or cls.__name__, str(exc)) from None


def _dump(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _dump(getattr(obj, f.name)) for f in dataclasses.fields(obj) if f.init}
    if isinstance(obj, (tuple, list)):
        return [_dump(v) for v in obj]
    return obj


# --------------------------------------------------------------------------
# entry points


def from_dict(data: Any) -> ExperimentConfig:
    cfg = _load(ExperimentConfig, data)
    validate(cfg)
    return cfg


def loads(text: str) -> ExperimentConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("", f"malformed YAML: {exc}") from None
    return from_dict(data)


def load(path) -> ExperimentConfig:
    return loads(Path(path).read_text())


def validate(cfg: ExperimentConfig) -> None:
    """Check cross-field preconditions before anything runs."""
    if cfg.n_modes < 1:
        raise ConfigError("n_modes", f"must be >= 1, got {cfg.n_modes}")
    if not cfg.t_end > 0:
        raise ConfigError("t_end", f"must be positive, got {cfg.t_end}")
    try:
        f = cfg.f
    except ValueError as exc:
        raise ConfigError("nonlinearity", str(exc)) from None
    spec = build_spectrum(cfg.domain, cfg.n_modes)
    for name in ("a", "b"):
        if len(getattr(cfg.initial, name)) > cfg.n_modes:
            raise ConfigError(f"initial.{name}", f"more than n_modes = {cfg.n_modes} entries")
    if cfg.initial.kind == "mode" and cfg.initial.mode < 1:
        raise ConfigError("initial.mode", "must be >= 1")
    if not cfg.override_assumptions:
        rep = check_assumptions(f, spec.lambda1, cfg.domain.volume)
        if not rep.ok:
            raise ConfigError("nonlinearity", "; ".join(rep.notes) +
                              " (set override_assumptions: true to run anyway)")
    d = cfg.diagnostics
    if d.smoothing is not None:
        if not 0 < d.smoothing.t_min < cfg.t_end:
            raise ConfigError("diagnostics.smoothing.t_min", "must lie in (0, t_end)")
        if any(n < 1 for n in d.smoothing.n_list):
            raise ConfigError("diagnostics.smoothing.n_list", "entries must be >= 1")
    if d.dependence is not None:
        if d.dependence.epsilon == 0:
            raise ConfigError("diagnostics.dependence.epsilon",
                              "zero perturbation makes both initial data coincide")
        if not 1 <= d.dependence.mode <= cfg.n_modes:
            raise ConfigError("diagnostics.dependence.mode", f"must lie in [1, {cfg.n_modes}]")
        if any(not e > 0 for e in d.dependence.ladder):
            raise ConfigError("diagnostics.dependence.ladder", "entries must be positive")
    if d.absorb is not None:
        lo, hi = d.absorb.norm_range
        if not 0 <= lo <= hi:
            raise ConfigError("diagnostics.absorb.norm_range", "need 0 <= low <= high")
        if d.absorb.size < 1:
            raise ConfigError("diagnostics.absorb.size", "must be >= 1")
        if not d.absorb.radii or any(not r > 0 for r in d.absorb.radii):
            raise ConfigError("diagnostics.absorb.radii", "need positive radii")
    if d.tail is not None:
        if not d.tail.epsilon > 0:
            raise ConfigError("diagnostics.tail.epsilon", "must be positive")
        if d.tail.m_list is not None and (
            not d.tail.m_list or any(not 0 <= m <= cfg.n_modes for m in d.tail.m_list)
        ):
            raise ConfigError("diagnostics.tail.m_list", f"entries must lie in [0, {cfg.n_modes}]")
        if d.tail.t0 is not None and not 0 <= d.tail.t0 <= cfg.t_end:
            raise ConfigError("diagnostics.tail.t0", "must lie in [0, t_end]")
