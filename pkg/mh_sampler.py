#!/usr/bin/env python3
"""
Metropolis-Hastings Sampler

Runs Metropolis-Hastings chains, unadjusted chains and per-step random
mixtures (hybrid kernels) of the proposals in proposals.py.

Random numbers: every chain owns one numpy Generator on a PCG64 bit generator
seeded with the run seed. Each step draws, in this order and whatever the
outcome: one uniform selecting the kernel component, one standard normal
vector for the proposal noise, one uniform for the accept test. Chains with
equal seeds therefore share their random numbers across variants. Start rules
that need randomness (exact draw, warm start) use a second stream spawned from
SeedSequence(seed).
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from proposals import ProposalMoments, ProposalVariant, log_q, moments, sample
from sampler_errors import ChainError, SamplerError, ScaleNotPositive
from target_models import TargetModel

logger = logging.getLogger(__name__)

DEFAULT_BURN_IN = 1000
DEFAULT_WARM_STEPS = 10_000


@dataclass(frozen=True)
class KernelComponent:
    variant: ProposalVariant
    h: float
    weight: float = 1.0

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"step size must be positive, got {self.h}")
        if self.weight < 0:
            raise ValueError(f"component weight must be non-negative, got {self.weight}")


@dataclass(frozen=True)
class KernelSpec:
    """A mixture of proposals; a component is drawn by weight at every step."""

    components: Tuple[KernelComponent, ...]

    def __post_init__(self):
        components = tuple(self.components)
        if not components:
            raise ValueError("kernel needs at least one component")
        total = sum(c.weight for c in components)
        if not total > 0:
            raise ValueError("kernel weights must not all be zero")
        normalized = tuple(KernelComponent(c.variant, c.h, c.weight / total) for c in components)
        object.__setattr__(self, "components", normalized)

    @classmethod
    def single(cls, variant: ProposalVariant, h: float) -> "KernelSpec":
        return cls((KernelComponent(variant, h, 1.0),))

    @property
    def label(self) -> str:
        if len(self.components) == 1:
            return self.components[0].variant.name
        return "+".join(f"{c.variant.name}@{c.weight:g}" for c in self.components)

    def select(self, u: float) -> int:
        """Component index for a uniform draw u in [0, 1)."""
        cumulative = np.cumsum([c.weight for c in self.components])
        return min(int(np.searchsorted(cumulative, u, side="right")), len(self.components) - 1)


class StepResult(NamedTuple):
    x_next: np.ndarray
    accepted: bool
    log_alpha: float
    proposal_sq_jump: float = 0.0
    component: int = 0
    scale_failure: bool = False


class _PointState:
    """A chain state with its log density and proposal moments computed on demand."""

    def __init__(self, x: np.ndarray, target: TargetModel, log_pi: Optional[float] = None):
        self.x = x
        self.target = target
        self._log_pi = log_pi
        self._moments: Dict[int, ProposalMoments] = {}

    @property
    def log_pi(self) -> float:
        if self._log_pi is None:
            self._log_pi = self.target.log_density_unnorm(self.x)
        return self._log_pi

    def moments(self, index: int, component: KernelComponent, lenient: bool = False) -> ProposalMoments:
        m = self._moments.get(index)
        if m is None or (not m.positive and not lenient):
            m = moments(component.variant, self.x, component.h, self.target, lenient=lenient)
            self._moments[index] = m
        return m

    def remember(self, index: int, m: ProposalMoments):
        self._moments[index] = m


class MarkovKernel:
    """Transition kernel of a KernelSpec on a target."""

    def __init__(self, spec: KernelSpec, target: TargetModel, lenient: bool = False):
        self.spec = spec
        self.target = target
        self.lenient = lenient

    def start(self, x: np.ndarray) -> _PointState:
        return _PointState(np.asarray(x, dtype=float), self.target)

    def step(self, state: _PointState, rng: np.random.Generator) -> Tuple[_PointState, StepResult]:
        index = self.spec.select(rng.random())
        xi = rng.standard_normal(state.x.shape[0])
        u = rng.random()
        component = self.spec.components[index]

        if not component.variant.adjusted:
            m_x = state.moments(index, component, lenient=self.lenient)
            y = sample(m_x, xi)
            jump = float(np.dot(y - state.x, y - state.x))
            return _PointState(y, self.target), StepResult(
                y, True, 0.0, jump, index, not m_x.positive)

        m_x = state.moments(index, component)
        y = sample(m_x, xi)
        jump = float(np.dot(y - state.x, y - state.x))
        if not np.all(np.isfinite(y)):
            return state, StepResult(state.x, False, -math.inf, jump, index)

        failure = False
        try:
            m_y = moments(component.variant, y, component.h, self.target)
        except ScaleNotPositive as exc:
            logger.debug("proposal rejected, scale fails at proposed point: %s", exc)
            m_y = None
            failure = True

        if m_y is None:
            log_alpha = -math.inf
        else:
            log_pi_y = self.target.log_density_unnorm(y)
            log_ratio = (log_pi_y + log_q(m_y, state.x)) - (state.log_pi + log_q(m_x, y))
            log_alpha = min(0.0, log_ratio) if not math.isnan(log_ratio) else -math.inf

        accepted = u < math.exp(log_alpha)
        if not accepted:
            return state, StepResult(state.x, False, log_alpha, jump, index, failure)
        new_state = _PointState(y, self.target, log_pi_y)
        new_state.remember(index, m_y)
        return new_state, StepResult(y, True, log_alpha, jump, index, failure)


def mh_step(x: np.ndarray, kernel: KernelSpec, target: TargetModel,
            rng: np.random.Generator) -> StepResult:
    """One Metropolis-Hastings transition (unadjusted components always move)."""
    _, result = MarkovKernel(kernel, target).step(_PointState(np.asarray(x, dtype=float), target), rng)
    return result


def log_acceptance(variant: ProposalVariant, h: float, target: TargetModel,
                   x: np.ndarray, y: np.ndarray) -> float:
    """log alpha(x, y) = min(0, log pi(y) q(y, x) - log pi(x) q(x, y)); -inf if S fails at y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    m_x = moments(variant, x, h, target)
    try:
        m_y = moments(variant, y, h, target)
    except ScaleNotPositive:
        return -math.inf
    log_ratio = ((target.log_density_unnorm(y) + log_q(m_y, x))
                 - (target.log_density_unnorm(x) + log_q(m_x, y)))
    return min(0.0, log_ratio)


def unadjusted_step(x: np.ndarray, variant: ProposalVariant, h: float, target: TargetModel,
                    rng: np.random.Generator, lenient: bool = False) -> np.ndarray:
    """x_next = mu(x, h) + S(x, h) xi with no accept test."""
    if variant.adjusted:
        variant = ProposalVariant(variant.tag, False, variant.params)
    kernel = MarkovKernel(KernelSpec.single(variant, h), target, lenient=lenient)
    _, result = kernel.step(_PointState(np.asarray(x, dtype=float), target), rng)
    return result.x_next


@dataclass(frozen=True)
class WarmStart:
    """Start from the end of an auxiliary chain; RWM with h = 2.38^2/d by default."""

    n_warm: int = DEFAULT_WARM_STEPS
    kernel: Optional[KernelSpec] = None


StartRule = Union[str, WarmStart, np.ndarray, Sequence[float]]


@dataclass(frozen=True, eq=False)
class RunConfig:
    target: TargetModel
    kernel: KernelSpec
    n_steps: int
    start: StartRule = "origin"
    seed: int = 0
    burn_in: int = DEFAULT_BURN_IN
    thin: int = 1
    lenient: bool = False
    escape_radius: Optional[float] = None
    label: str = ""

    def __post_init__(self):
        if self.n_steps < 0:
            raise ValueError(f"n_steps must be non-negative, got {self.n_steps}")
        if self.thin < 1:
            raise ValueError(f"thin must be at least 1, got {self.thin}")
        if self.burn_in < 0:
            raise ValueError(f"burn_in must be non-negative, got {self.burn_in}")


@dataclass(frozen=True, eq=False)
class ChainTrace:
    """
    Scalar summaries of a chain run.

    accepted, log_alpha, proposal_sq_jump and component hold one entry per
    step. first_coord and sq_norm hold the state after every
    recorded_every-th step. Entry k of a per-step series describes the
    transition from x_k to x_{k+1}.
    """

    dim: int
    x0_first_coord: float
    x0_sq_norm: float
    first_coord: np.ndarray
    sq_norm: np.ndarray
    accepted: np.ndarray
    log_alpha: np.ndarray
    proposal_sq_jump: np.ndarray
    burn_in: int = 0
    recorded_every: int = 1
    component: Optional[np.ndarray] = None
    scale_failures: int = 0
    stopped_at: Optional[int] = None
    label: str = ""

    @property
    def n_steps(self) -> int:
        return int(self.accepted.shape[0])

    def first_coord_path(self) -> np.ndarray:
        """x_0, x_1, ... of the first coordinate (stride 1 only)."""
        if self.recorded_every != 1:
            raise ValueError("the full path needs recorded_every = 1")
        return np.concatenate(([self.x0_first_coord], self.first_coord))

    def sq_norm_path(self) -> np.ndarray:
        return np.concatenate(([self.x0_sq_norm], self.sq_norm))


def _spawned_generator(seed: int) -> np.random.Generator:
    child = np.random.SeedSequence(seed).spawn(1)[0]
    return np.random.Generator(np.random.PCG64(child))


def resolve_start(cfg: RunConfig) -> np.ndarray:
    """Initial state of a run from its start rule."""
    d = cfg.target.dim
    start = cfg.start
    if isinstance(start, str):
        if start == "origin":
            return np.zeros(d)
        if start == "exact":
            return cfg.target.exact_sample(_spawned_generator(cfg.seed))
        if start == "stationary-warmstart":
            start = WarmStart()
        else:
            raise ValueError(f"unknown start rule '{start}'")
    if isinstance(start, WarmStart):
        warm_kernel = start.kernel or KernelSpec.single(ProposalVariant("RWM"), 2.38 ** 2 / d)
        rng = _spawned_generator(cfg.seed)
        kernel = MarkovKernel(warm_kernel, cfg.target)
        state = kernel.start(np.zeros(d))
        for _ in range(start.n_warm):
            state, _ = kernel.step(state, rng)
        return state.x.copy()
    x0 = np.asarray(start, dtype=float)
    if x0.shape != (d,):
        raise ValueError(f"start vector has shape {x0.shape}, expected ({d},)")
    return x0.copy()


def run_chain(cfg: RunConfig) -> ChainTrace:
    """
    Run a chain and record its trace.

    Args:
        cfg: Run configuration

    Returns:
        ChainTrace; with an escape radius the chain stops at the first state
        with a non-finite entry or an entry above the radius, and the series
        end there

    Raises:
        ChainError: a step failed (e.g. the scale factor at the current state)
    """
    x0 = resolve_start(cfg)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    kernel = MarkovKernel(cfg.kernel, cfg.target, lenient=cfg.lenient)
    state = kernel.start(x0)

    n = cfg.n_steps
    n_recorded = n // cfg.thin
    first_coord = np.empty(n_recorded)
    sq_norm = np.empty(n_recorded)
    accepted = np.zeros(n, dtype=bool)
    log_alpha = np.zeros(n)
    jumps = np.zeros(n)
    component = np.zeros(n, dtype=np.int16)
    failures = 0
    stopped_at = None
    recorded = 0

    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n):
            try:
                state, result = kernel.step(state, rng)
            except SamplerError as exc:
                raise ChainError(k, exc) from exc
            except (FloatingPointError, np.linalg.LinAlgError) as exc:
                raise ChainError(k, exc) from exc
            accepted[k] = result.accepted
            log_alpha[k] = result.log_alpha
            jumps[k] = result.proposal_sq_jump
            component[k] = result.component
            failures += result.scale_failure
            if (k + 1) % cfg.thin == 0:
                first_coord[recorded] = state.x[0]
                sq_norm[recorded] = float(np.dot(state.x, state.x))
                recorded += 1
            if cfg.escape_radius is not None:
                peak = np.max(np.abs(state.x))
                if not np.isfinite(peak) or peak > cfg.escape_radius:
                    stopped_at = k
                    logger.debug("chain %s escaped at step %d", cfg.label or cfg.kernel.label, k)
                    break

    steps_done = n if stopped_at is None else stopped_at + 1
    return ChainTrace(
        dim=cfg.target.dim,
        x0_first_coord=float(x0[0]),
        x0_sq_norm=float(np.dot(x0, x0)),
        first_coord=first_coord[:recorded],
        sq_norm=sq_norm[:recorded],
        accepted=accepted[:steps_done],
        log_alpha=log_alpha[:steps_done],
        proposal_sq_jump=jumps[:steps_done],
        burn_in=cfg.burn_in,
        recorded_every=cfg.thin,
        component=component[:steps_done],
        scale_failures=int(failures),
        stopped_at=stopped_at,
        label=cfg.label or cfg.kernel.label,
    )


@dataclass(frozen=True)
class RunFailure:
    """A run that raised; kept in place of its trace."""

    index: int
    error_type: str
    message: str
    step: Optional[int] = None


def _run_indexed(item) -> Union[ChainTrace, RunFailure]:
    index, cfg = item
    try:
        return run_chain(cfg)
    except (SamplerError, ValueError) as exc:
        step = exc.step if isinstance(exc, ChainError) else None
        cause = exc.cause if isinstance(exc, ChainError) else exc
        return RunFailure(index, type(cause).__name__, str(exc), step)


def run_parallel(cfgs: Sequence[RunConfig], threads: int = 1) -> List[Union[ChainTrace, RunFailure]]:
    """
    Run independent chains, in worker processes when threads > 1.

    Results come back in input order; a failing run yields a RunFailure in
    its slot and does not stop the others.
    """
    items = list(enumerate(cfgs))
    if not items:
        return []
    if threads <= 1 or len(items) == 1:
        return [_run_indexed(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(threads, len(items))) as executor:
        return list(executor.map(_run_indexed, items))
