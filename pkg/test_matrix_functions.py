#!/usr/bin/env python3
"""
Tests for matrix_functions: scalar T-maps, structured representations,
spectral application, log-determinants and the gbO positivity check.
"""

import logging
import math

import numpy as np
import pytest
import scipy.linalg

from matrix_functions import (
    SERIES_THRESHOLD,
    DenseSymmetricRep,
    DiagonalRep,
    ScalarRep,
    SymTridiagonalRep,
    apply_spectral,
    assumption1_check,
    assumption1_function,
    log_det,
    log_of,
    phi_direct,
    phi_series,
    sqrt_of,
    t1_functional,
    t1_scalar,
    t2_functional,
    t2_scalar,
    t3_functional,
    t3_scalar,
    variance_functional,
    variance_map_spectrum,
)
from sampler_errors import NonPositiveSpectrum


@pytest.mark.parametrize("t, h, expected", [
    (0.0, 0.3, 0.15),
    (2.0, 1.0, (math.e - 1) / 2),
    (-1.0, 0.1, 1 - math.exp(-0.05)),
])
def test_t1_values(t, h, expected):
    assert t1_scalar(t, h, 1.0) == pytest.approx(expected, rel=1e-12)


def test_t1_hand_values():
    assert t1_scalar(2.0, 1.0) == pytest.approx(0.8591409, abs=1e-7)
    assert t1_scalar(-1.0, 0.1) == pytest.approx(0.0487706, abs=1e-7)


def test_t2_values_and_symmetry():
    assert t2_scalar(0.0, 1.0) == 0.0
    assert t2_scalar(1.0, 2.0) == pytest.approx(math.exp(-1) - 1, rel=1e-12)
    assert t2_scalar(-1.0, 2.0) == pytest.approx(0.6321206, abs=1e-7)


def test_t3_values():
    assert t3_scalar(0.0, 1.0) == pytest.approx(0.125, rel=1e-14)
    assert t3_scalar(2.0, 1.0) == pytest.approx(0.1795705, abs=1e-7)
    assert t3_scalar(-2.0, 1.0) == pytest.approx(0.0919699, abs=1e-7)


@pytest.mark.parametrize("order", [1, 2])
def test_series_and_closed_form_agree_near_threshold(order):
    rng = np.random.default_rng(42)
    magnitude = rng.uniform(SERIES_THRESHOLD / 2, 2 * SERIES_THRESHOLD, 1000)
    z = magnitude * rng.choice([-1.0, 1.0], 1000)
    np.testing.assert_allclose(phi_series(order, z), phi_direct(order, z), rtol=1e-9)


def test_scalar_maps_agree_across_branches():
    rng = np.random.default_rng(7)
    for _ in range(200):
        h = rng.uniform(0.05, 2.0)
        a = rng.uniform(0.5, 2.0)
        edge = 2.0 * SERIES_THRESHOLD / (a * h)
        below, above = 0.999 * edge, 1.001 * edge
        assert t1_scalar(below, h, a) == pytest.approx(t1_scalar(above, h, a), rel=1e-6)
        assert t3_scalar(-below, h, a) == pytest.approx(t3_scalar(-above, h, a), rel=1e-6)


def _random_symmetric(eigenvalues, seed):
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.normal(size=(len(eigenvalues), len(eigenvalues))))
    return (q * np.asarray(eigenvalues)) @ q.T


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_dense_t_functionals_match_matrix_exponential(seed):
    m = _random_symmetric([-2.0, -0.7, 0.5, 1.3, 2.1], seed)
    h, a = 0.4, 1.3
    eye = np.eye(5)
    expected_t1 = np.linalg.solve(a * m, scipy.linalg.expm(0.5 * a * h * m) - eye)
    expected_t2 = np.linalg.solve(a * m, scipy.linalg.expm(-0.25 * a * h * h * m @ m) - eye)
    am = a * m
    expected_t3 = np.linalg.solve(am @ am, scipy.linalg.expm(0.5 * a * h * m) - eye - 0.5 * a * h * m)

    rep = DenseSymmetricRep(m)
    np.testing.assert_allclose(apply_spectral(rep, t1_functional(h, a)).to_dense(), expected_t1,
                               rtol=1e-8, atol=1e-12)
    np.testing.assert_allclose(apply_spectral(rep, t2_functional(h, a)).to_dense(), expected_t2,
                               rtol=1e-8, atol=1e-12)
    np.testing.assert_allclose(apply_spectral(rep, t3_functional(h, a)).to_dense(), expected_t3,
                               rtol=1e-8, atol=1e-12)


@pytest.mark.parametrize("h", [0.01, 0.1, 1.0, 5.0])
def test_positivity_on_grid(h):
    t = np.linspace(-50, 50, 10001)
    with np.errstate(over="ignore"):
        assert np.all(t1_scalar(t, h) > 0)
        assert np.all(t3_scalar(t, h) >= 0)
        assert np.all(variance_map_spectrum("mO", t, h) > 0)
        assert np.all(variance_map_spectrum("bO", t, h) > 0)


def test_diagonal_structure_is_preserved():
    out = apply_spectral(DiagonalRep([-1.0, -2.0]), t1_functional(0.1))
    assert isinstance(out, DiagonalRep)
    np.testing.assert_allclose(out.entries, [0.0487706, 0.0475813], atol=1e-7)


def test_zero_scalar_limit():
    out = apply_spectral(ScalarRep(0.0, 3), t3_functional(1.0))
    assert isinstance(out, ScalarRep)
    assert out.value == pytest.approx(0.125)


@pytest.mark.parametrize("functional", [t1_functional(0.3), t2_functional(0.3, 2.0),
                                        t3_functional(0.3), sqrt_of(variance_functional("bO", 0.3))])
def test_tridiagonal_without_coupling_equals_diagonal(functional):
    tri = SymTridiagonalRep([-1.0, -1.0], [0.0])
    diag = DiagonalRep([-1.0, -1.0])
    np.testing.assert_allclose(tri.apply(functional).to_dense(), diag.apply(functional).to_dense())


def test_tridiagonal_apply_matches_dense():
    tri = SymTridiagonalRep([-1.0, 0.5, -2.0, 0.3], [0.4, -0.2, 0.7])
    functional = sqrt_of(variance_functional("mO", 0.5))
    np.testing.assert_allclose(tri.apply(functional).to_dense(),
                               DenseSymmetricRep(tri.to_dense()).apply(functional).to_dense(),
                               rtol=1e-10, atol=1e-12)


def test_tridiagonal_matvec_and_solve():
    tri = SymTridiagonalRep([4.0, 5.0, 6.0], [1.0, -2.0])
    v = np.array([1.0, -1.0, 2.0])
    dense = tri.to_dense()
    np.testing.assert_allclose(tri.matvec(v), dense @ v)
    np.testing.assert_allclose(tri.solve(v), np.linalg.solve(dense, v))


def test_dense_rep_is_symmetrised():
    rep = DenseSymmetricRep(np.array([[1.0, 2.0], [0.0, 3.0]]))
    np.testing.assert_array_equal(rep.matrix, rep.matrix.T)
    np.testing.assert_allclose(rep.matrix, [[1.0, 1.0], [1.0, 3.0]])


@pytest.mark.parametrize("variant", ["mO", "bO"])
def test_variance_at_zero_is_h(variant):
    assert variance_map_spectrum(variant, 0.0, 0.5) == pytest.approx(0.5)


def test_mo_variance_at_negative_eigenvalue():
    expected = (1 - math.exp(-1.5)) / 3 + 0.25
    assert variance_map_spectrum("mO", -3.0, 0.5) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(0.5089566, abs=1e-7)


def test_gbo_variance_at_unit_parameters_is_bo():
    t = np.linspace(-10, 10, 41)
    np.testing.assert_allclose(variance_map_spectrum("gbO", t, 0.7, 1.0, 1.0),
                               variance_map_spectrum("bO", t, 0.7))


def test_unknown_variance_variant():
    with pytest.raises(ValueError):
        variance_map_spectrum("xO", 0.0, 1.0)


def test_assumption1_at_unit_parameters():
    report = assumption1_check(1.0, 1.0)
    assert report.holds
    assert report.min_value > 0
    assert assumption1_function(0.0, 1.0, 1.0) == pytest.approx(1.0)


def test_assumption1_reports_failure():
    # left-tail coefficient 1/a4 + (a4/2 - 1/6)/a5 is negative here
    report = assumption1_check(0.1, 0.01)
    assert not report.holds
    assert report.tail_coefficient < 0


def test_assumption1_failure_is_logged_as_warning(caplog):
    with caplog.at_level(logging.WARNING, logger="matrix_functions"):
        assumption1_check(0.1, 0.01)
    assert [r.levelno for r in caplog.records] == [logging.WARNING]
    caplog.clear()
    with caplog.at_level(logging.WARNING, logger="matrix_functions"):
        assumption1_check(1.0, 1.0)
    assert caplog.records == []


def test_assumption1_exotic_parameters_are_reported():
    report = assumption1_check(10.0, 0.01)
    assert isinstance(report.holds, bool)
    assert np.isfinite(report.min_value)


def test_assumption1_rejects_non_positive_parameters():
    with pytest.raises(ValueError):
        assumption1_check(0.0, 1.0)


def test_log_det_examples():
    assert log_det(DiagonalRep([2.0, 3.0])) == pytest.approx(math.log(6))
    assert log_det(ScalarRep(5.0, 3)) == pytest.approx(4.8283137, abs=1e-7)
    assert log_det(SymTridiagonalRep([2.0, 2.0], [1.0])) == pytest.approx(math.log(3))


def test_tridiagonal_log_det_matches_dense():
    tri = SymTridiagonalRep([3.0, 4.0, 2.5, 5.0], [1.0, -0.5, 0.8])
    assert tri.is_positive_definite()
    assert tri.log_det() == pytest.approx(np.linalg.slogdet(tri.to_dense())[1], rel=1e-12)


def test_log_det_rejects_indefinite():
    with pytest.raises(NonPositiveSpectrum):
        DiagonalRep([1.0, -1.0]).log_det()
    with pytest.raises(NonPositiveSpectrum):
        SymTridiagonalRep([1.0, 1.0], [2.0]).log_det()
    with pytest.raises(NonPositiveSpectrum):
        ScalarRep(0.0, 2).log_det()


def test_sqrt_reports_offending_eigenvalue():
    with pytest.raises(NonPositiveSpectrum) as info:
        DiagonalRep([4.0, -9.0]).apply(sqrt_of())
    assert info.value.eigenvalue == -9.0
    np.testing.assert_allclose(DiagonalRep([4.0, 9.0]).apply(sqrt_of()).entries, [2.0, 3.0])
    np.testing.assert_allclose(DiagonalRep([1.0, math.e]).apply(log_of()).entries, [0.0, 1.0])


def test_affine_keeps_structure():
    tri = SymTridiagonalRep([1.0, 2.0], [0.5])
    out = tri.affine(2.0, 3.0)
    assert isinstance(out, SymTridiagonalRep)
    np.testing.assert_allclose(out.to_dense(), 2.0 * np.eye(2) + 3.0 * tri.to_dense())
    dense = DenseSymmetricRep(tri.to_dense())
    dense.eigenvalues()
    np.testing.assert_allclose(dense.affine(2.0, 3.0).eigenvalues(), 2.0 + 3.0 * dense.eigenvalues())
