#!/usr/bin/env python3
"""
Tests for mh_sampler: acceptance ratio, detailed balance, random number
order, hybrid kernels, start rules and chain runs.
"""

import math

import numpy as np
import pytest
from scipy import stats

from chain_diagnostics import acceptance_rate
from mh_sampler import (
    ChainTrace,
    KernelComponent,
    KernelSpec,
    RunConfig,
    RunFailure,
    WarmStart,
    log_acceptance,
    mh_step,
    resolve_start,
    run_chain,
    run_parallel,
    unadjusted_step,
)
from proposals import ProposalVariant, log_q, moments
from sampler_errors import ChainError, ScaleNotPositive
from target_models import (
    DoubleWellPotential,
    ExponentialClassSpec,
    GaussianPotential,
    ProductTarget,
    make_exponential_class_target,
)

STANDARD_1D = ProductTarget(GaussianPotential(0.5), 1)
ADJUSTED = ["RWM", "MALA", "fMALA", "mOMA", "bOMA", "gbOMA"]


def test_mala_log_acceptance_by_hand():
    x, y, h = np.zeros(1), np.ones(1), 0.5
    # N(0, 1): mu(y) = y - h y / 2 = 0.75, sd sqrt(h)
    log_q_xy = -0.5 * math.log(2 * math.pi) - 0.5 * math.log(h) - 0.5 * 1.0 / h
    log_q_yx = -0.5 * math.log(2 * math.pi) - 0.5 * math.log(h) - 0.5 * 0.75 ** 2 / h
    expected = min(0.0, (-0.5 + log_q_yx) - (0.0 + log_q_xy))
    assert expected == pytest.approx(-0.0625)
    assert log_acceptance(ProposalVariant("MALA"), h, STANDARD_1D, x, y) == pytest.approx(expected, rel=1e-12)


def test_random_walk_ratio_is_the_density_ratio():
    target = ProductTarget(DoubleWellPotential(), 2)
    x, y = np.array([0.2, -0.4]), np.array([1.5, 0.1])
    expected = min(0.0, target.log_density_unnorm(y) - target.log_density_unnorm(x))
    assert log_acceptance(ProposalVariant("RWM"), 0.3, target, x, y) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("tag", ADJUSTED)
def test_staying_put_is_always_accepted(tag):
    x = np.array([0.3, -0.8, 1.1])
    target = ProductTarget(DoubleWellPotential(), 3)
    assert log_acceptance(ProposalVariant(tag), 0.1, target, x, x) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("tag", ADJUSTED)
@pytest.mark.parametrize("d", [1, 3])
@pytest.mark.parametrize("potential", [GaussianPotential(0.5), DoubleWellPotential()])
def test_detailed_balance(tag, d, potential):
    target = ProductTarget(potential, d)
    variant = ProposalVariant(tag)
    rng = np.random.default_rng(17)
    h = 0.1
    for _ in range(25):
        x = rng.uniform(-1.5, 1.5, d)
        y = rng.uniform(-1.5, 1.5, d)
        forward = (target.log_density_unnorm(x) + log_q(moments(variant, x, h, target), y)
                   + log_acceptance(variant, h, target, x, y))
        backward = (target.log_density_unnorm(y) + log_q(moments(variant, y, h, target), x)
                    + log_acceptance(variant, h, target, y, x))
        assert forward == pytest.approx(backward, rel=1e-9, abs=1e-9)


def test_log_alpha_is_never_positive():
    target = ProductTarget(DoubleWellPotential(), 4)
    rng = np.random.default_rng(8)
    kernel = KernelSpec.single(ProposalVariant("fMALA"), 0.2)
    for _ in range(50):
        result = mh_step(rng.uniform(-1, 1, 4), kernel, target, rng)
        assert result.log_alpha <= 0.0


def test_rejected_step_keeps_the_state():
    trace = run_chain(RunConfig(ProductTarget(DoubleWellPotential(), 2),
                                KernelSpec.single(ProposalVariant("MALA"), 3.0),
                                n_steps=300, start=[1.0, -1.0], seed=4, burn_in=0))
    assert not trace.accepted.all()
    path = trace.first_coord_path()
    rejected = np.flatnonzero(~trace.accepted)
    np.testing.assert_array_equal(path[rejected + 1], path[rejected])


def test_proposed_point_with_failing_scale_is_rejected():
    target = ProductTarget(DoubleWellPotential(), 1)
    variant = ProposalVariant("fMALA")
    assert log_acceptance(variant, 0.5, target, np.array([0.5]), np.array([3.0])) == -math.inf


def test_failing_scale_at_current_state_raises():
    target = ProductTarget(DoubleWellPotential(), 1)
    with pytest.raises(ScaleNotPositive):
        log_acceptance(ProposalVariant("fMALA"), 0.5, target, np.array([3.0]), np.array([0.0]))


def test_ula_matches_euler_maruyama():
    target = ProductTarget(DoubleWellPotential(), 3)
    x = np.array([0.5, -1.2, 0.1])
    h = 0.05
    got = unadjusted_step(x, ProposalVariant("MALA"), h, target, np.random.default_rng(5))
    rng = np.random.default_rng(5)
    rng.random()
    xi = rng.standard_normal(3)
    rng.random()
    np.testing.assert_allclose(got, x + 0.5 * h * target.drift(x) + math.sqrt(h) * xi, rtol=1e-14)


def test_unadjusted_fula_fails_where_scale_is_not_positive():
    target = ProductTarget(DoubleWellPotential(), 1)
    cfg = RunConfig(target, KernelSpec.single(ProposalVariant.from_name("fULA"), 0.5),
                    n_steps=5, start=[3.0], burn_in=0)
    with pytest.raises(ChainError) as info:
        run_chain(cfg)
    assert info.value.step == 0
    assert isinstance(info.value.cause, ScaleNotPositive)


def test_lenient_unadjusted_chain_counts_scale_failures():
    target = ProductTarget(DoubleWellPotential(), 1)
    cfg = RunConfig(target, KernelSpec.single(ProposalVariant.from_name("fULA"), 0.5),
                    n_steps=1, start=[3.0], burn_in=0, lenient=True)
    trace = run_chain(cfg)
    assert trace.scale_failures == 1
    assert trace.accepted.all()


def test_run_parallel_reports_failures_in_place():
    target = ProductTarget(DoubleWellPotential(), 1)
    good = RunConfig(target, KernelSpec.single(ProposalVariant("MALA"), 0.1), n_steps=10, burn_in=0)
    bad = RunConfig(target, KernelSpec.single(ProposalVariant.from_name("fULA"), 0.5),
                    n_steps=10, start=[3.0], burn_in=0)
    results = run_parallel([good, bad, good])
    assert isinstance(results[0], ChainTrace)
    assert isinstance(results[2], ChainTrace)
    assert isinstance(results[1], RunFailure)
    assert results[1].index == 1
    assert results[1].error_type == "ScaleNotPositive"
    assert results[1].step == 0


def test_run_is_deterministic():
    cfg = RunConfig(ProductTarget(DoubleWellPotential(), 5),
                    KernelSpec.single(ProposalVariant("bOMA"), 0.3), n_steps=200, seed=11, burn_in=0)
    a, b = run_chain(cfg), run_chain(cfg)
    np.testing.assert_array_equal(a.first_coord, b.first_coord)
    np.testing.assert_array_equal(a.sq_norm, b.sq_norm)
    np.testing.assert_array_equal(a.accepted, b.accepted)


def test_parallel_equals_serial():
    target = ProductTarget(GaussianPotential(0.5), 4)
    cfgs = [RunConfig(target, KernelSpec.single(ProposalVariant(tag), 0.4), n_steps=100, seed=s, burn_in=0)
            for s, tag in enumerate(["RWM", "MALA", "fMALA"])]
    serial = run_parallel(cfgs, threads=1)
    parallel = run_parallel(cfgs, threads=2)
    for a, b in zip(serial, parallel):
        np.testing.assert_array_equal(a.first_coord, b.first_coord)
        np.testing.assert_array_equal(a.log_alpha, b.log_alpha)
    assert run_parallel([], threads=4) == []


def test_zero_steps():
    trace = run_chain(RunConfig(STANDARD_1D, KernelSpec.single(ProposalVariant("MALA"), 0.1),
                                n_steps=0, start=[0.5]))
    assert trace.n_steps == 0
    assert trace.first_coord.size == 0
    np.testing.assert_array_equal(trace.first_coord_path(), [0.5])


def test_thinning_records_every_kth_state():
    base = RunConfig(STANDARD_1D, KernelSpec.single(ProposalVariant("MALA"), 0.5), n_steps=100, seed=3)
    thinned = RunConfig(STANDARD_1D, KernelSpec.single(ProposalVariant("MALA"), 0.5), n_steps=100,
                        seed=3, thin=10)
    full, sparse = run_chain(base), run_chain(thinned)
    np.testing.assert_array_equal(sparse.first_coord, full.first_coord[9::10])
    with pytest.raises(ValueError):
        sparse.first_coord_path()


def test_kernel_weights_are_normalised():
    spec = KernelSpec((KernelComponent(ProposalVariant("MALA"), 0.1, 1.0),
                       KernelComponent(ProposalVariant("RWM"), 0.1, 3.0)))
    assert [c.weight for c in spec.components] == [0.25, 0.75]
    assert spec.select(0.1) == 0
    assert spec.select(0.25) == 1
    assert spec.select(0.999) == 1
    assert spec.label == "MALA@0.25+RWM@0.75"


def test_kernel_rejects_bad_weights():
    with pytest.raises(ValueError):
        KernelSpec(())
    with pytest.raises(ValueError):
        KernelSpec((KernelComponent(ProposalVariant("MALA"), 0.1, 0.0),))
    with pytest.raises(ValueError):
        KernelComponent(ProposalVariant("MALA"), 0.1, -1.0)
    with pytest.raises(ValueError):
        KernelComponent(ProposalVariant("MALA"), 0.0)


def test_hybrid_component_frequencies():
    spec = KernelSpec((KernelComponent(ProposalVariant("fMALA"), 0.3, 0.25),
                       KernelComponent(ProposalVariant("RWM"), 0.05, 0.75)))
    trace = run_chain(RunConfig(ProductTarget(GaussianPotential(0.5), 3), spec, n_steps=20_000,
                                seed=6, burn_in=0))
    assert np.mean(trace.component == 1) == pytest.approx(0.75, abs=0.02)


def test_equal_seeds_share_component_draws():
    target = ProductTarget(GaussianPotential(0.5), 2)
    first = KernelSpec((KernelComponent(ProposalVariant("fMALA"), 0.3, 0.5),
                        KernelComponent(ProposalVariant("RWM"), 0.1, 0.5)))
    second = KernelSpec((KernelComponent(ProposalVariant("MALA"), 0.2, 0.5),
                         KernelComponent(ProposalVariant("bOMA"), 0.4, 0.5)))
    a = run_chain(RunConfig(target, first, n_steps=500, seed=21))
    b = run_chain(RunConfig(target, second, n_steps=500, seed=21))
    np.testing.assert_array_equal(a.component, b.component)


def test_start_rules():
    target = ProductTarget(GaussianPotential(0.5), 3)
    kernel = KernelSpec.single(ProposalVariant("MALA"), 0.1)
    cold = RunConfig(target, kernel, 1, start=WarmStart(0))
    np.testing.assert_array_equal(resolve_start(cold), np.zeros(3))
    exact = RunConfig(target, kernel, 1, start="exact", seed=5)
    np.testing.assert_array_equal(resolve_start(exact), resolve_start(exact))
    warm = RunConfig(target, kernel, 1, start=WarmStart(200), seed=5)
    assert np.all(np.isfinite(resolve_start(warm)))
    with pytest.raises(ValueError):
        resolve_start(RunConfig(target, kernel, 1, start=[1.0, 2.0]))
    with pytest.raises(ValueError):
        resolve_start(RunConfig(target, kernel, 1, start="somewhere"))


def test_run_config_validation():
    kernel = KernelSpec.single(ProposalVariant("MALA"), 0.1)
    with pytest.raises(ValueError):
        RunConfig(STANDARD_1D, kernel, -1)
    with pytest.raises(ValueError):
        RunConfig(STANDARD_1D, kernel, 10, thin=0)
    with pytest.raises(ValueError):
        RunConfig(STANDARD_1D, kernel, 10, burn_in=-5)


def test_escape_radius_stops_a_diverging_chain():
    target = make_exponential_class_target(ExponentialClassSpec(4, 0.25))
    cfg = RunConfig(target, KernelSpec.single(ProposalVariant.from_name("fULA"), 0.1),
                    n_steps=500, start=[8.0], burn_in=0, lenient=True, escape_radius=1e6)
    trace = run_chain(cfg)
    assert trace.stopped_at is not None
    assert trace.n_steps == trace.stopped_at + 1
    assert trace.sq_norm.size == trace.n_steps


@pytest.mark.slow
def test_rwm_acceptance_near_optimal_in_ten_dimensions():
    d = 10
    cfg = RunConfig(ProductTarget(GaussianPotential(0.5), d),
                    KernelSpec.single(ProposalVariant("RWM"), 2.38 ** 2 / d),
                    n_steps=50_000, seed=1, burn_in=1000)
    assert 0.20 <= acceptance_rate(run_chain(cfg)) <= 0.35


@pytest.mark.slow
def test_mala_leaves_the_target_invariant():
    cfg = RunConfig(STANDARD_1D, KernelSpec.single(ProposalVariant("MALA"), 0.5),
                    n_steps=100_000, seed=2, burn_in=1000, thin=20)
    samples = run_chain(cfg).first_coord[50:]
    assert stats.kstest(samples, "norm").pvalue > 0.01
