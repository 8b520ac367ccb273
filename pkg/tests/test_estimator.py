import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from robust_spectra.errors import ParameterError
from robust_spectra.estimator import (
    ConstraintSet, Diagnostics, empirical_covariance, pair_differences, positive_part,
    robust_covariance, solve_min_frobenius)
from robust_spectra.net import build_delta_net

import oracles

SIGMA2 = np.array([[2.0, 1.0], [1.0, 2.0]])
THREE_DIRS = np.array([[1.0, 0.0], [0.0, 1.0], [2 ** -0.5, 2 ** -0.5]])


def energies(thetas, s):
    return np.einsum("ij,jk,ik->i", thetas, s, thetas)


def random_instance(rng, k):
    return ConstraintSet(*oracles.interval_instance(rng, k))


# empirical covariance and pairing ----------------------------------------------

def test_empirical_covariance_hand_value():
    x = np.array([[1.0, 0.0], [-1.0, 0.0]])
    np.testing.assert_array_equal(empirical_covariance(x), [[1.0, 0.0], [0.0, 0.0]])


def test_empirical_covariance_centered_matches_numpy():
    x = np.random.default_rng(0).standard_normal((50, 3)) + 4.0
    np.testing.assert_allclose(empirical_covariance(x, center=True), np.cov(x.T), atol=1e-13)
    with pytest.raises(ParameterError):
        empirical_covariance(x[:1], center=True)


@given(arrays(float, (12, 3), elements=st.floats(-1e3, 1e3)))
def test_centered_covariance_is_psd(x):
    w = np.linalg.eigvalsh(empirical_covariance(x, center=True))
    assert w.min() >= -1e-9 * max(1.0, abs(w).max())


def test_empirical_covariance_gaussian_identity():
    x = np.random.default_rng(1).standard_normal((10 ** 5, 3))
    assert np.max(np.abs(empirical_covariance(x, center=True) - np.eye(3))) <= 0.05


def test_pair_differences_examples():
    v = np.array([0.3, -2.0])
    np.testing.assert_array_equal(pair_differences(np.array([v, v])), [[0.0, 0.0]])
    np.testing.assert_allclose(pair_differences(np.array([[1.0, 0.0], [0.0, 0.0]])),
                               [[2 ** -0.5, 0.0]])
    assert pair_differences(np.ones((7, 2))).shape == (3, 2)
    with pytest.raises(ParameterError):
        pair_differences(np.ones((1, 2)))


@given(arrays(float, (10, 2), elements=st.floats(-1e3, 1e3)),
       arrays(float, 2, elements=st.floats(-1e3, 1e3)))
def test_pair_differences_ignore_mean(x, mu):
    # shift by a multiple of 2**-10 so the translation is exact in floating point
    mu = np.round(mu * 1024) / 1024
    x = np.round(x * 1024) / 1024
    np.testing.assert_array_equal(pair_differences(x + mu), pair_differences(x))


def test_pair_differences_second_moment_with_mean():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((10 ** 5, 2)) @ np.linalg.cholesky(SIGMA2).T + [5.0, -3.0]
    y = pair_differences(x)
    assert np.max(np.abs(y.T @ y / y.shape[0] - SIGMA2)) <= 0.05


# minimum-Frobenius solver ---------------------------------------------------------

def test_tight_bounds_recover_matrix():
    e = energies(THREE_DIRS, SIGMA2)
    q, duals, ok = solve_min_frobenius(ConstraintSet(THREE_DIRS, e, e))
    assert ok
    np.testing.assert_allclose(q, SIGMA2, atol=1e-8)


def test_tight_bounds_linear_solve_oracle():
    a = np.array([[t[0] ** 2, 2 * t[0] * t[1], t[1] ** 2] for t in THREE_DIRS])
    s11, s12, s22 = np.linalg.solve(a, energies(THREE_DIRS, SIGMA2))
    np.testing.assert_allclose([[s11, s12], [s12, s22]], SIGMA2, atol=1e-14)


def test_unbounded_above_gives_zero():
    th = build_delta_net(3, 0.5, 0).half()
    q, duals, ok = solve_min_frobenius(ConstraintSet(th, np.zeros(len(th)),
                                                     np.full(len(th), math.inf)))
    assert ok
    np.testing.assert_array_equal(q, np.zeros((3, 3)))


def test_exact_bounds_on_net_within_discretisation_slack():
    rng = np.random.default_rng(3)
    l = rng.standard_normal((3, 3))
    s = l @ l.T
    th = build_delta_net(3, 0.3, 1).half()
    e = energies(th, s)
    q, duals, ok = solve_min_frobenius(ConstraintSet(th, e, e))
    assert ok
    assert np.linalg.norm(q - s) <= 5 * 0.3 * np.linalg.norm(s)


@pytest.mark.parametrize("k", range(12))
def test_matches_interior_point_oracle(k):
    cons = random_instance(np.random.default_rng([11, k]), k)
    q, duals, ok = solve_min_frobenius(cons)
    ref = oracles.min_frobenius(cons.thetas, cons.lower, cons.upper)
    assert ok
    assert cons.violation(q) <= 1e-8
    assert abs(np.linalg.norm(q) - np.linalg.norm(ref)) <= 1e-6
    np.testing.assert_allclose(q, ref, atol=1e-5)


@pytest.mark.parametrize("k", range(12))
def test_dual_representation(k):
    cons = random_instance(np.random.default_rng([12, k]), k)
    q, duals, ok = solve_min_frobenius(cons)
    assert ok
    assert np.all(duals.xi_plus >= 0) and np.all(duals.xi_minus >= 0)
    assert np.linalg.norm(q - duals.reconstruct(cons.thetas)) <= 10 * 1e-8


def test_inconsistent_constraints_are_flagged():
    th = np.array([[1.0, 0.0], [1.0, 0.0]])
    cons = ConstraintSet(th, [1.0, 3.0], [1.0, 3.0])
    q, duals, ok = solve_min_frobenius(cons, max_iter=200)
    assert not ok
    assert duals.max_violation > 1e-8


def test_constraint_set_validation():
    with pytest.raises(ParameterError):
        ConstraintSet(THREE_DIRS, [1.0, 2.0, 3.0], [0.0, 2.0, 3.0])
    with pytest.raises(ParameterError):
        ConstraintSet(THREE_DIRS, [1.0], [2.0])
    with pytest.raises(ParameterError):
        solve_min_frobenius(ConstraintSet(THREE_DIRS, [0] * 3, [1] * 3), tol=0.0)


# positive part ----------------------------------------------------------------------

def test_positive_part_examples():
    np.testing.assert_allclose(positive_part(np.diag([3.0, -1.0])), np.diag([3.0, 0.0]),
                               atol=1e-15)
    np.testing.assert_allclose(positive_part(np.array([[0.0, 1.0], [1.0, 0.0]])),
                               0.5 * np.ones((2, 2)), atol=1e-15)
    np.testing.assert_allclose(positive_part(SIGMA2), SIGMA2, atol=1e-10)


@given(st.integers(0, 10 ** 6), st.integers(1, 6))
def test_positive_part_is_nearest_psd(seed, d):
    rng = np.random.default_rng(seed)
    m = oracles.random_symmetric(d, rng, 3.0)
    p = positive_part(m)
    np.testing.assert_allclose(positive_part(p), p, atol=1e-10)
    np.testing.assert_allclose(p, oracles.funm_sym(m, lambda w: np.maximum(w, 0)), atol=1e-10)
    l = rng.standard_normal((d, d))
    s = l @ l.T
    assert np.linalg.norm(m - p) <= np.linalg.norm(m - s) + 1e-10


# full pipeline --------------------------------------------------------------------

def test_rank_one_signal_direction():
    rng = np.random.default_rng(4)
    v = np.array([0.6, 0.8])
    x = rng.choice([-1.0, 1.0], size=(4000, 1)) * v
    est, diag = robust_covariance(x, 0.2, seed=0)
    top = np.linalg.eigh(est)[1][:, -1]
    assert abs(top @ v) >= 0.99
    assert diag.converged


def test_diagnostics_fields():
    x = np.random.default_rng(5).standard_normal((2001, 2))
    est, diag = robust_covariance(x, 0.3)
    assert isinstance(diag, Diagnostics)
    js = diag.to_json()
    for key in ("net_size", "kappa", "vacuous_count", "converged", "iterations",
                "max_violation"):
        assert key in js
    assert js["dropped_rows"] == 1 and js["n_effective"] == 1000
    assert np.all(np.linalg.eigvalsh(est) >= -1e-12)


def test_centered_mode_and_errors():
    x = np.random.default_rng(6).standard_normal((3000, 2))
    est, diag = robust_covariance(x + 8.0, 0.3, mode="centered")
    assert diag.mode == "centered"
    np.testing.assert_allclose(est, robust_covariance(x, 0.3, mode="centered")[0], atol=1e-6)
    with pytest.raises(ParameterError):
        robust_covariance(x, 0.3, mode="other")
    with pytest.raises(ParameterError):
        robust_covariance(x, 0.3, lambda_mode="oracle")
    with pytest.raises(ParameterError):
        robust_covariance(x, 0.3, vacuous="ignore")


def test_free_policy_all_vacuous_gives_zero():
    x = np.random.default_rng(7).standard_normal((60, 2))
    est, diag = robust_covariance(x, 0.3, vacuous="free")
    assert diag.vacuous_count == len(build_delta_net(2, 0.3, 0).half())
    np.testing.assert_array_equal(est, np.zeros((2, 2)))


def test_threads_do_not_change_result():
    x = np.random.default_rng(8).standard_normal((4000, 3))
    a, _ = robust_covariance(x, 0.4, threads=1)
    b, _ = robust_covariance(x, 0.4, threads=3)
    np.testing.assert_array_equal(a, b)


@pytest.mark.slow
def test_gaussian_estimate_close_to_truth():
    rng = np.random.default_rng(9)
    x = rng.standard_normal((10 ** 6, 2)) @ np.linalg.cholesky(SIGMA2).T
    est, diag = robust_covariance(x, 0.2, kappa=3.0, trace=4.0,
                                  hs_norm=float(np.linalg.norm(SIGMA2)))
    emp = empirical_covariance(x, center=True)
    slack = 5 * 0.2 * np.linalg.norm(SIGMA2)
    assert np.linalg.norm(est - SIGMA2) <= np.linalg.norm(emp - SIGMA2) + slack


def test_contamination_inflates_robust_less():
    wins = 0
    for trial in range(50):
        rng = np.random.default_rng([13, trial])
        x = rng.standard_normal((10 ** 4, 2)) * np.sqrt([2.0, 1.0])
        k = 100
        u = rng.standard_normal((k, 2))
        x[:k] = 100.0 * u / np.linalg.norm(u, axis=1, keepdims=True)
        est, _ = robust_covariance(x, 0.2, kappa=3.0, trace=3.0)
        emp = empirical_covariance(x, center=True)
        wins += np.linalg.eigvalsh(est)[-1] - 2.0 < np.linalg.eigvalsh(emp)[-1] - 2.0
    assert wins >= 45
