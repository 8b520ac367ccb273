"""The compiled kernels and the numpy fallback must agree."""

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from robust_spectra import _backend, _pure
from robust_spectra.net import build_delta_net

ext = pytest.importorskip("robust_spectra._kernels")


@given(arrays(float, 50, elements=st.floats(-1e6, 1e6)))
def test_psi_parity(t):
    # C and numpy log1p may round differently in the last place
    np.testing.assert_array_max_ulp(ext.psi(t), _pure.psi(t), maxulp=2)
    np.testing.assert_array_max_ulp(ext.psi_prime(t), _pure.psi_prime(t), maxulp=2)
    sat = np.abs(t) >= 1.0
    np.testing.assert_array_equal(ext.psi(t)[sat], _pure.psi(t)[sat])


@given(arrays(float, st.integers(1, 80), elements=st.floats(0.0, 1e3)),
       st.floats(1e-3, 10.0), st.floats(1e-3, 10.0))
def test_psi_sum_parity(a, beta, lam):
    assert ext.psi_sum(a, beta, lam) == pytest.approx(_pure.psi_sum(a, beta, lam),
                                                      rel=1e-12, abs=1e-12)
    assert ext.psi_sum_slope(a, beta, lam) == pytest.approx(
        _pure.psi_sum_slope(a, beta, lam), rel=1e-12, abs=1e-12)


@given(arrays(float, st.integers(2, 80), elements=st.floats(1e-3, 1e3)), st.floats(1e-3, 10.0))
def test_solve_beta_parity(a, lam):
    lo, hi = lam / a.max(), lam / np.quantile(a, 0.25)
    b_ext, r_ext, _ = ext.solve_beta(a, lam, lo, hi, 1e-12, 500)
    b_pure, r_pure, _ = _pure.solve_beta(a, lam, lo, hi, 1e-12, 500)
    assert b_ext == pytest.approx(b_pure, rel=1e-9)
    assert abs(r_ext) <= a.size * 1e-12 and abs(r_pure) <= a.size * 1e-12


@pytest.mark.parametrize("d", [1, 3, 8])
def test_jacobi_parity(d):
    rng = np.random.default_rng(d)
    m = rng.standard_normal((d, d))
    m = m + m.T
    w1, v1, _ = ext.jacobi_eigh(m, 1e-12, 100)
    w2, v2, _ = _pure.jacobi_eigh(m, 1e-12, 100)
    np.testing.assert_allclose(np.sort(w1), np.sort(w2), atol=1e-12)
    np.testing.assert_allclose((v1 * w1) @ v1.T, (v2 * w2) @ v2.T, atol=1e-10)


def test_dykstra_parity():
    rng = np.random.default_rng(0)
    th = build_delta_net(2, 0.5, 0).half()
    s = np.array([[2.0, 0.5], [0.5, 1.0]])
    e = np.einsum("ij,jk,ik->i", th, s, th)
    lo, hi = e * 0.9, e * 1.1
    q1, *_, ok1, v1 = ext.dykstra(th, lo, hi, 1e-10, 20000)
    q2, *_, ok2, v2 = _pure.dykstra(th, lo, hi, 1e-10, 20000)
    assert ok1 and ok2
    np.testing.assert_allclose(q1, q2, atol=1e-9)


def test_backend_env_switch():
    code = "from robust_spectra import _backend; print(_backend.NAME)"
    env = dict(os.environ, ROBUST_SPECTRA_BACKEND="pure")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True)
    assert out.stdout.strip() == "pure"
    assert _backend.NAME == os.environ.get("ROBUST_SPECTRA_BACKEND", "ext").replace("auto", "ext")
