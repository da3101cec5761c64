#!/usr/bin/env python3
"""
Experiment Configuration

Loads and validates the JSON experiment files described in CONFIG_SCHEMA.md.
Every schema violation raises ConfigError naming the offending field
(e.g. ``variants[1].name``) and, where it can be located, the line in the
file. ``echo_config`` gives the canonical JSON form of a parsed config;
parsing the echo gives back an equal config.
"""

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from chain_diagnostics import MIN_K_SAMPLES
from mh_sampler import KernelComponent, KernelSpec, WarmStart
from proposals import STEP_EXPONENTS, ProposalVariant, UNIT_PARAMS
from sampler_errors import ConfigError
from target_models import (
    Ar1CauchySpec,
    DoubleWellPotential,
    ExponentialClassPotential,
    GaussianPotential,
    Potential1D,
    ProductTarget,
    TargetModel,
    make_ar1_target,
)

EXPERIMENTS = (
    "efficiency-sweep",
    "transient-trace",
    "acf-compare",
    "asymptotic",
    "ergodicity-probe",
    "single-run",
)

DEFAULT_SEED = 0
DEFAULT_BURN_IN = 1000
DEFAULT_THIN = 1
DEFAULT_THREADS = 1
DEFAULT_N_STEPS = 10_000
DEFAULT_MAX_LAG = 100
DEFAULT_WARM_STEPS = 10_000

# Stationarity-optimal and transient-optimal step sizes for the trace and
# autocorrelation experiments: h = coefficient * d^(-exponent)
STATIONARY_STEP = {
    "RWM": (2.38 ** 2, 1.0),
    "MALA": (1.65 ** 2, 1.0 / 3.0),
    "fMALA": (1.79 ** 2, 0.2),
    "mOMA": (1.79 ** 2, 0.2),
    "bOMA": (1.79 ** 2, 0.2),
    "gbOMA": (1.79 ** 2, 0.2),
}
TRANSIENT_MALA_STEP = (2.0, 0.5)

STRATEGY_PRESETS = {
    "RWM": (("RWM", "stationary", 1.0),),
    "MALA": (("MALA", "stationary", 1.0),),
    "fMALA": (("fMALA", "stationary", 1.0),),
    "hybrid-mala-rwm": (("MALA", "stationary", 0.5), ("RWM", "stationary", 0.5)),
    "hybrid-fmala-rwm": (("fMALA", "stationary", 0.5), ("RWM", "stationary", 0.5)),
    "hybrid-mala-transient": (("MALA", "stationary", 0.5), ("MALA", "transient", 0.5)),
    "hybrid-fmala-transient": (("fMALA", "stationary", 0.5), ("MALA", "transient", 0.5)),
}

ASYMPTOTIC_VARIANTS = ("fM", "mO", "bO", "gbO")
SAMPLING_METHODS = ("auto", "exact", "grid", "rwm")


# --------------------------------------------------------------------------
# Sections
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PotentialConfig:
    name: str
    gamma: Optional[float] = None
    beta: Optional[float] = None
    r_pi: float = 0.0

    def build(self) -> Potential1D:
        if self.name == "gaussian":
            return GaussianPotential(0.5 if self.gamma is None else self.gamma)
        if self.name == "double-well":
            return DoubleWellPotential()
        return ExponentialClassPotential(self.beta, self.gamma, self.r_pi)

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"name": self.name}
        if self.name == "gaussian":
            out["gamma"] = 0.5 if self.gamma is None else self.gamma
        elif self.name == "exponential-class":
            out.update(beta=self.beta, gamma=self.gamma, r_pi=self.r_pi)
        return out


@dataclass(frozen=True)
class TargetConfig:
    kind: str
    potential: Optional[PotentialConfig] = None
    link: str = "half"

    def build(self, d: int) -> TargetModel:
        if self.kind == "ar1":
            return make_ar1_target(Ar1CauchySpec(d, self.link))
        return ProductTarget(self.potential.build(), d)

    def to_dict(self) -> Dict[str, Any]:
        if self.kind == "ar1":
            return {"kind": "ar1", "link": self.link}
        return {"kind": "product", "potential": self.potential.to_dict()}


@dataclass(frozen=True)
class VariantConfig:
    name: str
    params: Tuple[float, ...] = UNIT_PARAMS
    exponent: Optional[float] = None
    h: Optional[float] = None
    ell: Optional[float] = None

    @property
    def variant(self) -> ProposalVariant:
        return ProposalVariant.from_name(self.name, self.params)

    @property
    def default_exponent(self) -> float:
        return STEP_EXPONENTS[self.variant.tag]

    @property
    def effective_exponent(self) -> float:
        return self.default_exponent if self.exponent is None else self.exponent

    @property
    def exponent_overridden(self) -> bool:
        return self.exponent is not None and self.exponent != self.default_exponent

    def step_size(self, d: int, ell: Optional[float] = None) -> float:
        """Explicit h when given, else ell^2 d^(-exponent)."""
        if self.h is not None:
            return self.h
        ell = self.ell if ell is None else ell
        if ell is None:
            raise ValueError(f"variant {self.name} has neither h nor ell")
        return ell ** 2 * d ** (-self.effective_exponent)

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"name": self.name}
        if self.params != UNIT_PARAMS:
            out["params"] = list(self.params)
        for key in ("exponent", "h", "ell"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out


@dataclass(frozen=True)
class ComponentConfig:
    variant: str
    rule: Optional[str] = None
    h: Optional[float] = None
    weight: float = 1.0

    def step_size(self, d: int) -> float:
        if self.h is not None:
            return self.h
        tag = ProposalVariant.from_name(self.variant).tag
        coefficient, exponent = TRANSIENT_MALA_STEP if self.rule == "transient" else STATIONARY_STEP[tag]
        return coefficient * d ** (-exponent)

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"variant": self.variant, "weight": self.weight}
        if self.h is not None:
            out["h"] = self.h
        else:
            out["rule"] = self.rule
        return out


@dataclass(frozen=True)
class StrategyConfig:
    name: str
    components: Tuple[ComponentConfig, ...]

    def kernel(self, d: int) -> KernelSpec:
        return KernelSpec(tuple(
            KernelComponent(ProposalVariant.from_name(c.variant), c.step_size(d), c.weight)
            for c in self.components))

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "components": [c.to_dict() for c in self.components]}


@dataclass(frozen=True)
class StartConfig:
    rule: str = "origin"
    n_warm: int = DEFAULT_WARM_STEPS
    vector: Tuple[float, ...] = ()

    def resolve(self, d: int):
        if self.rule == "vector":
            if len(self.vector) != d:
                raise ConfigError("start", f"start vector has length {len(self.vector)}, dimension is {d}")
            return np.array(self.vector, dtype=float)
        if self.rule == "stationary-warmstart":
            return WarmStart(self.n_warm)
        return self.rule

    def to_dict(self):
        if self.rule == "vector":
            return list(self.vector)
        if self.rule == "stationary-warmstart":
            return {"rule": self.rule, "n_warm": self.n_warm}
        return self.rule


@dataclass(frozen=True)
class ProbeRow:
    variant: str
    beta: float
    gamma: float
    h: float
    start_norms: Tuple[float, ...] = (5.0, 20.0)

    def to_dict(self) -> Dict[str, Any]:
        return {"variant": self.variant, "beta": self.beta, "gamma": self.gamma, "h": self.h,
                "start_norms": list(self.start_norms)}


@dataclass(frozen=True)
class ProbeConfig:
    rows: Tuple[ProbeRow, ...] = ()
    probe_steps: int = 10_000
    escape_radius: float = 1e6
    acceptance_floor: float = 1e-3
    min_band_visits: int = 50
    r_pi: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {"rows": [r.to_dict() for r in self.rows], "probe_steps": self.probe_steps,
                "escape_radius": self.escape_radius, "acceptance_floor": self.acceptance_floor,
                "min_band_visits": self.min_band_visits, "r_pi": self.r_pi}


@dataclass(frozen=True)
class AsymptoticVariant:
    name: str
    params: Tuple[float, ...] = UNIT_PARAMS

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "params": list(self.params)}


@dataclass(frozen=True)
class AsymptoticConfig:
    variants: Tuple[AsymptoticVariant, ...] = ()
    potentials: Tuple[PotentialConfig, ...] = ()
    n_samples: int = 100_000
    method: str = "auto"
    ell_curve: Tuple[float, ...] = ()
    c5_samples: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {"variants": [v.to_dict() for v in self.variants],
                "potentials": [p.to_dict() for p in self.potentials],
                "n_samples": self.n_samples, "method": self.method,
                "ell_curve": list(self.ell_curve), "c5_samples": self.c5_samples}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    seed: int = DEFAULT_SEED
    target: Optional[TargetConfig] = None
    variants: Tuple[VariantConfig, ...] = ()
    strategies: Tuple[StrategyConfig, ...] = ()
    dimensions: Tuple[int, ...] = ()
    ell_grid: Tuple[float, ...] = ()
    n_steps: int = DEFAULT_N_STEPS
    burn_in: int = DEFAULT_BURN_IN
    thin: int = DEFAULT_THIN
    start: StartConfig = field(default_factory=StartConfig)
    threads: int = DEFAULT_THREADS
    output: Optional[str] = None
    coord_mode: str = "first"
    limit_k: Optional[float] = None
    max_lag: int = DEFAULT_MAX_LAG
    probe: Optional[ProbeConfig] = None
    asymptotic: Optional[AsymptoticConfig] = None

    def to_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "experiment": self.experiment,
            "seed": self.seed,
            "variants": [v.to_dict() for v in self.variants],
            "strategies": [s.to_dict() for s in self.strategies],
            "dimensions": list(self.dimensions),
            "ell_grid": list(self.ell_grid),
            "n_steps": self.n_steps,
            "burn_in": self.burn_in,
            "thin": self.thin,
            "start": self.start.to_dict(),
            "threads": self.threads,
            "coord_mode": self.coord_mode,
            "max_lag": self.max_lag,
        }
        if self.target is not None:
            out["target"] = self.target.to_dict()
        if self.output is not None:
            out["output"] = self.output
        if self.limit_k is not None:
            out["limit_k"] = self.limit_k
        if self.probe is not None:
            out["probe"] = self.probe.to_dict()
        if self.asymptotic is not None:
            out["asymptotic"] = self.asymptotic.to_dict()
        return out

    def overrides(self) -> List[str]:
        """Variants whose step-size exponent departs from the variant default."""
        return [f"{v.name}: exponent {v.effective_exponent:g} (default {v.default_exponent:g})"
                for v in self.variants if v.exponent_overridden]


def echo_config(cfg: ExperimentConfig) -> str:
    """Canonical single-line JSON form of a config."""
    return json.dumps(cfg.to_dict(), sort_keys=True)


# --------------------------------------------------------------------------
# Parsing
# --------------------------------------------------------------------------

class _Reader:
    """Typed field access with the field path kept for error messages."""

    def __init__(self, data: Any, path: str, source: Optional[str]):
        self.data = data
        self.path = path
        self.source = source

    def error(self, field_path: str, message: str) -> ConfigError:
        return ConfigError(field_path, message, _locate(self.source, field_path))

    def child_path(self, key: Union[str, int]) -> str:
        if isinstance(key, int):
            return f"{self.path}[{key}]"
        return f"{self.path}.{key}" if self.path else key

    def require_object(self, allowed: Tuple[str, ...]) -> "_Reader":
        if not isinstance(self.data, dict):
            raise self.error(self.path or "<root>", "expected an object")
        for key in self.data:
            if key not in allowed:
                raise self.error(self.child_path(key), "unknown field")
        return self

    def has(self, key: str) -> bool:
        return key in self.data

    def child(self, key: Union[str, int]) -> "_Reader":
        return _Reader(self.data[key], self.child_path(key), self.source)

    def items(self, key: str) -> List["_Reader"]:
        if key not in self.data:
            return []
        value = self.data[key]
        if not isinstance(value, list):
            raise self.error(self.child_path(key), "expected a list")
        sub = _Reader(value, self.child_path(key), self.source)
        return [sub.child(i) for i in range(len(value))]

    def number(self, key: str, default=None, minimum: Optional[float] = None,
               positive: bool = False) -> Optional[float]:
        if key not in self.data:
            return default
        return _as_number(self.child(key), minimum, positive)

    def integer(self, key: str, default=None, minimum: Optional[int] = None) -> Optional[int]:
        if key not in self.data:
            return default
        return _as_integer(self.child(key), minimum)

    def string(self, key: str, default=None, choices: Optional[Tuple[str, ...]] = None) -> Optional[str]:
        if key not in self.data:
            return default
        value = self.data[key]
        if not isinstance(value, str):
            raise self.error(self.child_path(key), "expected a string")
        if choices is not None and value not in choices:
            raise self.error(self.child_path(key), f"must be one of {', '.join(choices)}, got '{value}'")
        return value

    def numbers(self, key: str, positive: bool = False) -> Tuple[float, ...]:
        return tuple(_as_number(item, None, positive) for item in self.items(key))


def _as_number(reader: _Reader, minimum=None, positive=False) -> float:
    value = reader.data
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise reader.error(reader.path, "expected a finite number")
    if positive and not value > 0:
        raise reader.error(reader.path, f"must be positive, got {value}")
    if minimum is not None and value < minimum:
        raise reader.error(reader.path, f"must be at least {minimum}, got {value}")
    return float(value)


def _as_integer(reader: _Reader, minimum=None) -> int:
    value = reader.data
    if isinstance(value, bool) or not isinstance(value, int):
        raise reader.error(reader.path, "expected an integer")
    if minimum is not None and value < minimum:
        raise reader.error(reader.path, f"must be at least {minimum}, got {value}")
    return int(value)


def _locate(source: Optional[str], field_path: str) -> Optional[int]:
    """Line of the first occurrence of the field's last key in the source text."""
    if not source:
        return None
    keys = re.findall(r"[A-Za-z_]+", field_path)
    if not keys:
        return None
    needle = f'"{keys[-1]}"'
    for number, line in enumerate(source.splitlines(), start=1):
        if needle in line:
            return number
    return None


def _parse_params(reader: _Reader) -> Tuple[float, ...]:
    if not reader.has("params"):
        return UNIT_PARAMS
    params = reader.numbers("params", positive=True)
    if len(params) != 5:
        raise reader.error(reader.child_path("params"), f"expected 5 values (a1..a5), got {len(params)}")
    return params


def _parse_potential(reader: _Reader) -> PotentialConfig:
    reader.require_object(("name", "gamma", "beta", "r_pi"))
    name = reader.string("name", choices=("gaussian", "double-well", "exponential-class"))
    if name is None:
        raise reader.error(reader.child_path("name"), "missing")
    if name == "gaussian":
        return PotentialConfig(name, gamma=reader.number("gamma", 0.5, positive=True))
    if name == "double-well":
        return PotentialConfig(name)
    beta = reader.number("beta", positive=True)
    gamma = reader.number("gamma", positive=True)
    if beta is None or gamma is None:
        raise reader.error(reader.child_path("beta" if beta is None else "gamma"), "missing")
    return PotentialConfig(name, gamma, beta, reader.number("r_pi", 0.0, minimum=0.0))


def _parse_target(reader: _Reader) -> TargetConfig:
    reader.require_object(("kind", "potential", "link"))
    kind = reader.string("kind", choices=("product", "ar1"))
    if kind is None:
        raise reader.error(reader.child_path("kind"), "missing")
    if kind == "ar1":
        return TargetConfig("ar1", link=reader.string("link", "half", choices=("half", "sine")))
    if not reader.has("potential"):
        raise reader.error(reader.child_path("potential"), "missing")
    return TargetConfig("product", _parse_potential(reader.child("potential")))


def _parse_variant_name(reader: _Reader, key: str, params=UNIT_PARAMS) -> str:
    name = reader.string(key)
    if name is None:
        raise reader.error(reader.child_path(key), "missing")
    try:
        ProposalVariant.from_name(name, params)
    except ValueError as exc:
        raise reader.error(reader.child_path(key), str(exc)) from exc
    return name


def _parse_variant(reader: _Reader) -> VariantConfig:
    if isinstance(reader.data, str):
        reader = _Reader({"name": reader.data}, reader.path, reader.source)
    reader.require_object(("name", "params", "exponent", "h", "ell"))
    params = _parse_params(reader)
    name = _parse_variant_name(reader, "name", params)
    return VariantConfig(
        name=name,
        params=params,
        exponent=reader.number("exponent", minimum=0.0),
        h=reader.number("h", positive=True),
        ell=reader.number("ell", positive=True),
    )


def _parse_component(reader: _Reader) -> ComponentConfig:
    reader.require_object(("variant", "rule", "h", "weight"))
    variant = _parse_variant_name(reader, "variant")
    h = reader.number("h", positive=True)
    rule = reader.string("rule", None if h is not None else "stationary",
                         choices=("stationary", "transient"))
    if rule == "transient" and ProposalVariant.from_name(variant).tag != "MALA":
        raise reader.error(reader.child_path("rule"), "the transient rule applies to MALA only")
    return ComponentConfig(variant, rule, h, reader.number("weight", 1.0, minimum=0.0))


def _parse_strategy(reader: _Reader) -> StrategyConfig:
    if isinstance(reader.data, str):
        name = reader.data
        if name not in STRATEGY_PRESETS:
            raise reader.error(reader.path, f"unknown strategy '{name}'")
        return StrategyConfig(name, tuple(ComponentConfig(v, rule, None, w)
                                          for v, rule, w in STRATEGY_PRESETS[name]))
    reader.require_object(("name", "components"))
    name = reader.string("name")
    if name is None:
        raise reader.error(reader.child_path("name"), "missing")
    components = tuple(_parse_component(item) for item in reader.items("components"))
    if not components:
        raise reader.error(reader.child_path("components"), "needs at least one component")
    if not sum(c.weight for c in components) > 0:
        raise reader.error(reader.child_path("components"), "weights must not all be zero")
    return StrategyConfig(name, components)


def _parse_start(reader: _Reader) -> StartConfig:
    value = reader.data
    if isinstance(value, str):
        if value not in ("origin", "exact", "stationary-warmstart"):
            raise reader.error(reader.path, f"unknown start rule '{value}'")
        return StartConfig(value)
    if isinstance(value, list):
        return StartConfig("vector", vector=tuple(_as_number(reader.child(i)) for i in range(len(value))))
    reader.require_object(("rule", "n_warm"))
    rule = reader.string("rule", choices=("origin", "exact", "stationary-warmstart"))
    if rule is None:
        raise reader.error(reader.child_path("rule"), "missing")
    return StartConfig(rule, reader.integer("n_warm", DEFAULT_WARM_STEPS, minimum=0))


def _parse_probe(reader: _Reader) -> ProbeConfig:
    reader.require_object(("rows", "probe_steps", "escape_radius", "acceptance_floor",
                           "min_band_visits", "r_pi"))
    rows = []
    for item in reader.items("rows"):
        item.require_object(("variant", "beta", "gamma", "h", "start_norm", "start_norms"))
        name = _parse_variant_name(item, "variant")
        values = {}
        for key in ("beta", "gamma", "h"):
            values[key] = item.number(key, positive=True)
            if values[key] is None:
                raise item.error(item.child_path(key), "missing")
        if item.has("start_norm"):
            norms = (_as_number(item.child("start_norm"), minimum=0.0),)
        elif item.has("start_norms"):
            norms = item.numbers("start_norms")
        else:
            norms = (5.0, 20.0)
        rows.append(ProbeRow(name, values["beta"], values["gamma"], values["h"], norms))
    return ProbeConfig(
        rows=tuple(rows),
        probe_steps=reader.integer("probe_steps", 10_000, minimum=1),
        escape_radius=reader.number("escape_radius", 1e6, positive=True),
        acceptance_floor=reader.number("acceptance_floor", 1e-3, minimum=0.0),
        min_band_visits=reader.integer("min_band_visits", 50, minimum=1),
        r_pi=reader.number("r_pi", 0.0, minimum=0.0),
    )


def _parse_asymptotic(reader: _Reader) -> AsymptoticConfig:
    reader.require_object(("variants", "potentials", "n_samples", "method", "ell_curve", "c5_samples"))
    variants = []
    for item in reader.items("variants"):
        if isinstance(item.data, str):
            item = _Reader({"name": item.data}, item.path, item.source)
        item.require_object(("name", "params"))
        name = item.string("name", choices=ASYMPTOTIC_VARIANTS)
        if name is None:
            raise item.error(item.child_path("name"), "missing")
        variants.append(AsymptoticVariant(name, _parse_params(item)))
    potentials = tuple(_parse_potential(item) for item in reader.items("potentials"))
    return AsymptoticConfig(
        variants=tuple(variants),
        potentials=potentials,
        n_samples=reader.integer("n_samples", 100_000, minimum=MIN_K_SAMPLES),
        method=reader.string("method", "auto", choices=SAMPLING_METHODS),
        ell_curve=reader.numbers("ell_curve"),
        c5_samples=reader.integer("c5_samples", 0, minimum=0),
    )


_TOP_LEVEL = ("experiment", "seed", "target", "variants", "strategies", "dimensions", "ell_grid",
              "n_steps", "burn_in", "thin", "start", "threads", "output", "coord_mode", "limit_k",
              "max_lag", "probe", "asymptotic")

_REQUIRED = {
    "efficiency-sweep": ("target", "variants", "dimensions"),
    "transient-trace": ("target", "strategies", "dimensions"),
    "acf-compare": ("target", "strategies", "dimensions"),
    "asymptotic": ("asymptotic",),
    "ergodicity-probe": ("probe",),
    "single-run": ("target", "variants", "dimensions"),
}


def config_from_dict(data: Any, source: Optional[str] = None) -> ExperimentConfig:
    """
    Validate a decoded JSON object and build the experiment config.

    Args:
        data: Decoded JSON
        source: Original file text, used to report line numbers

    Returns:
        ExperimentConfig with defaults applied

    Raises:
        ConfigError: on any schema violation
    """
    reader = _Reader(data, "", source).require_object(_TOP_LEVEL)
    experiment = reader.string("experiment", choices=EXPERIMENTS)
    if experiment is None:
        raise reader.error("experiment", "missing")
    for key in _REQUIRED[experiment]:
        if not reader.has(key):
            raise reader.error(key, f"required by the {experiment} experiment")

    seed = reader.integer("seed", DEFAULT_SEED, minimum=0)
    if seed >= 2 ** 64:
        raise reader.error("seed", "must fit in 64 bits")
    dimensions = tuple(_as_integer(item, minimum=1) for item in reader.items("dimensions"))
    variants = tuple(_parse_variant(item) for item in reader.items("variants"))
    strategies = tuple(_parse_strategy(item) for item in reader.items("strategies"))

    if experiment == "single-run":
        if len(dimensions) != 1:
            raise reader.error("dimensions", "single-run takes exactly one dimension")
        if len(variants) != 1:
            raise reader.error("variants", "single-run takes exactly one variant")
        if variants[0].h is None and variants[0].ell is None:
            raise reader.error("variants[0]", "single-run needs h or ell")
    if experiment in ("efficiency-sweep", "single-run") and not variants:
        raise reader.error("variants", "needs at least one variant")
    if experiment in ("transient-trace", "acf-compare") and not strategies:
        raise reader.error("strategies", "needs at least one strategy")

    target = _parse_target(reader.child("target")) if reader.has("target") else None
    if target is not None and target.kind == "ar1" and any(d < 2 for d in dimensions):
        raise reader.error("dimensions", "the AR(1) target needs dimension >= 2")

    return ExperimentConfig(
        experiment=experiment,
        seed=seed,
        target=target,
        variants=variants,
        strategies=strategies,
        dimensions=dimensions,
        ell_grid=reader.numbers("ell_grid", positive=True),
        n_steps=reader.integer("n_steps", DEFAULT_N_STEPS, minimum=0),
        burn_in=reader.integer("burn_in", DEFAULT_BURN_IN, minimum=0),
        thin=reader.integer("thin", DEFAULT_THIN, minimum=1),
        start=_parse_start(reader.child("start")) if reader.has("start") else StartConfig(),
        threads=reader.integer("threads", DEFAULT_THREADS, minimum=1),
        output=reader.string("output"),
        coord_mode=reader.string("coord_mode", "first", choices=("first", "full_mean")),
        limit_k=reader.number("limit_k", minimum=0.0),
        max_lag=reader.integer("max_lag", DEFAULT_MAX_LAG, minimum=1),
        probe=_parse_probe(reader.child("probe")) if reader.has("probe") else None,
        asymptotic=_parse_asymptotic(reader.child("asymptotic")) if reader.has("asymptotic") else None,
    )


def parse_config(path: Union[str, Path]) -> ExperimentConfig:
    """Load and validate an experiment configuration file."""
    path = Path(path)
    if not path.exists():
        raise ConfigError("<file>", f"config file '{path}' not found")
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<json>", f"{exc.msg} (column {exc.colno})", exc.lineno) from exc
    return config_from_dict(data, text)
