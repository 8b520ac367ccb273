"""Global robust covariance estimator.

Per-direction intervals over a delta-net become the constraints
``b_minus(theta) <= theta' Q theta <= b_plus(theta)``; the estimate is the
minimum-Frobenius-norm symmetric ``Q`` meeting them, clamped to the PSD cone.
"""

from dataclasses import asdict, dataclass, field
import math

import numpy as np
from scipy.optimize import nnls

from . import _backend
from ._parallel import thread_map
from .errors import NoSignalError, ParameterError
from .net import DeltaNet, build_delta_net
from .robust_direction import (InfluenceParams, bounds_from_projections, default_influence,
                               estimate_kappa, oracle_lambda, point_estimate,
                               practical_lambda_from_projections)
from .spectral import BoundParams, as_symmetric, eigh

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 50_000
# stand-in for an infinite eta under the "cap" vacuous policy
VACUOUS_ETA = 0.25


def _as_sample(sample):
    x = np.asarray(sample, dtype=float)
    if x.ndim != 2 or x.shape[0] == 0 or x.shape[1] == 0:
        raise ParameterError("sample must be a non-empty n x d array")
    if not np.all(np.isfinite(x)):
        raise ParameterError("sample has non-finite entries")
    return x


def empirical_covariance(sample, center=False):
    """``(1/n) sum X_i X_i'``, or the unbiased covariance when ``center`` is set."""
    x = _as_sample(sample)
    n = x.shape[0]
    if center:
        if n < 2:
            raise ParameterError("centering needs n >= 2")
        x = x - x.mean(axis=0)
        c = x.T @ x / (n - 1)
    else:
        c = x.T @ x / n
    return 0.5 * (c + c.T)


def pair_differences(sample):
    """Rows ``(X_i - X_{i + n/2}) / sqrt(2)`` for ``i < n/2``.

    An odd final row is dropped. The output's second moment estimates the
    covariance whatever the mean.
    """
    x = _as_sample(sample)
    n = x.shape[0]
    if n < 2:
        raise ParameterError("pairing needs n >= 2")
    h = n // 2
    return (x[:h] - x[h:2 * h]) / math.sqrt(2.0)


@dataclass(frozen=True)
class ConstraintSet:
    """Directions (rows of ``thetas``) with interval bounds on ``theta' Q theta``."""

    thetas: np.ndarray = field(repr=False)
    lower: np.ndarray = field(repr=False)
    upper: np.ndarray = field(repr=False)

    def __post_init__(self):
        t = np.atleast_2d(np.asarray(self.thetas, dtype=float))
        lo = np.asarray(self.lower, dtype=float).ravel()
        hi = np.asarray(self.upper, dtype=float).ravel()
        if lo.shape[0] != t.shape[0] or hi.shape[0] != t.shape[0]:
            raise ParameterError("one lower and one upper bound per direction")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
            raise ParameterError("bounds must not be NaN")
        if np.any(lo > hi):
            raise ParameterError("every lower bound must be <= its upper bound")
        for name, v in (("thetas", t), ("lower", lo), ("upper", hi)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @classmethod
    def from_bounds(cls, bounds):
        thetas = np.array([b.theta for b in bounds])
        return cls(thetas, [b.b_minus for b in bounds], [b.b_plus for b in bounds])

    @property
    def dim(self):
        return self.thetas.shape[1]

    def violation(self, q):
        """Largest amount by which ``q`` breaks a constraint (0 when feasible)."""
        s = np.einsum("ij,jk,ik->i", self.thetas, q, self.thetas)
        v = np.maximum(self.lower - s, s - self.upper)
        return float(max(np.max(v), 0.0)) if v.size else 0.0


@dataclass(frozen=True)
class DualWeights:
    """Non-negative weights with ``Q = sum (xi_plus - xi_minus) theta theta'``."""

    xi_plus: np.ndarray = field(repr=False)
    xi_minus: np.ndarray = field(repr=False)
    iterations: int = 0
    max_violation: float = 0.0
    method: str = "dykstra"

    def reconstruct(self, thetas):
        w = self.xi_plus - self.xi_minus
        return (thetas.T * w) @ thetas


def solve_min_frobenius(constraints, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Minimum-Frobenius symmetric matrix meeting every interval constraint.

    Dykstra's method over the rank-one half-spaces. Converged means the
    largest violation, the last sweep's movement and the complementary
    slackness gap ``sum xi * |slack|`` (relative to ``1 + ||Q||^2``) are all
    within ``tol``.
    Dykstra can stall when many nearly parallel constraints are active; a run
    that exhausts ``max_iter`` falls back to an exact least-distance solve,
    accepted only if feasible within ``tol``. Failing that, the
    least-violating Dykstra iterate is returned with ``converged=False``.

    Returns
    -------
    q : ndarray
    duals : DualWeights
    converged : bool
    """
    if not tol > 0.0 or max_iter < 1:
        raise ParameterError("tol must be positive and max_iter >= 1")
    q, xp, xm, sweeps, ok, viol = _backend.dykstra(
        constraints.thetas, constraints.lower, constraints.upper, float(tol), int(max_iter))
    q = 0.5 * (q + q.T)
    duals = DualWeights(np.asarray(xp), np.asarray(xm), int(sweeps), float(viol))
    if not ok:
        exact = _least_distance(constraints, tol, int(sweeps))
        if exact is not None:
            return exact[0], exact[1], True
    return q, duals, bool(ok)


def _least_distance(cons, tol, iterations):
    """Exact minimum-norm feasible matrix through one non-negative least squares.

    ``min |x| s.t. G x >= h`` is solved by ``u = argmin_{u >= 0} |E u - f|``
    with ``E = [G'; h']`` and ``f = e_last``; then ``x = G'u / (1 - h'u)`` and
    ``u / (1 - h'u)`` are the multipliers. Rows of ``G`` are the vectorised
    ``theta theta'`` (negated for upper bounds). Returns ``None`` when the
    certificate fails: infeasible system or residual violation above ``tol``.
    """
    th = cons.thetas
    m, d = th.shape
    outer = np.einsum("ki,kj->kij", th, th).reshape(m, d * d)
    lo_rows = np.flatnonzero(np.isfinite(cons.lower))
    hi_rows = np.flatnonzero(np.isfinite(cons.upper))
    g = np.concatenate([outer[lo_rows], -outer[hi_rows]])
    h = np.concatenate([cons.lower[lo_rows], -cons.upper[hi_rows]])
    if g.shape[0] == 0:
        return None
    e = np.vstack([g.T, h[None, :]])
    f = np.zeros(d * d + 1)
    f[-1] = 1.0
    u, _ = nnls(e, f, maxiter=50 * e.shape[1])
    denom = 1.0 - float(h @ u)
    if denom <= 1e-12:
        return None
    y = u / denom
    q = (g.T @ y).reshape(d, d)
    q = 0.5 * (q + q.T)
    viol = cons.violation(q)
    if viol > tol:
        return None
    xp = np.zeros(m)
    xm = np.zeros(m)
    xp[lo_rows] = y[:lo_rows.size]
    xm[hi_rows] = y[lo_rows.size:]
    return q, DualWeights(xp, xm, iterations, viol, method="least_distance")


def positive_part(m):
    """Clamp negative eigenvalues to zero."""
    spec = eigh(as_symmetric(m))
    return spec.reconstruct(np.maximum(spec.eigenvalues, 0.0))


@dataclass
class Diagnostics:
    net_size: int
    kappa: float
    vacuous_count: int
    converged: bool
    iterations: int
    max_violation: float
    crossed_count: int = 0
    no_signal_count: int = 0
    mode: str = "paired"
    n_effective: int = 0
    dropped_rows: int = 0
    trace_plugin: float = 0.0
    hs_norm_plugin: float = 0.0
    sigma: float = 0.0
    lambda_mode: str = "grid"
    vacuous_policy: str = "cap"
    solver: str = "dykstra"
    backend: str = _backend.NAME

    def to_json(self):
        return {k: (v if not isinstance(v, float) or math.isfinite(v) else str(v))
                for k, v in asdict(self).items()}


def _pilot_trace(x, eps, threads):
    """Sum of robust energies along the coordinate axes."""
    d = x.shape[1]

    def axis_energy(j):
        a = x[:, j] * x[:, j]
        if not np.any(a > 0.0):
            return 0.0
        g = default_influence(a, eps)
        try:
            return point_estimate(a, g.lam)
        except NoSignalError:
            return 0.0

    return float(sum(thread_map(axis_energy, range(d), threads)))


def robust_covariance(sample, delta, eps=0.1, seed=0, *, mode="paired", kappa=None,
                      trace=None, hs_norm=None, sigma=None, s4=math.inf,
                      lambda_mode="grid", true_cov=None, fourth_moment_root=None,
                      vacuous="cap", tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER,
                      threads=None, net=None):
    """Robust covariance estimate ``Sigma_hat_+`` and its diagnostics.

    Parameters
    ----------
    sample : ndarray, shape (n, d)
    delta : float
        Net radius. Smaller is tighter and slower.
    eps : float
        Confidence level of the per-direction intervals.
    seed : int
        Net construction seed.
    mode : {"paired", "centered"}
        ``paired`` works on :func:`pair_differences` and needs no mean;
        ``centered`` subtracts the sample mean.
    kappa, trace, hs_norm : float, optional
        Known values. Missing ones are plugged in: kappa from
        :func:`estimate_kappa`, trace from robust axis energies, hs_norm from
        trace.
    lambda_mode : {"grid", "practical", "oracle"}
        ``oracle`` needs ``true_cov`` and ``fourth_moment_root``.
    vacuous : {"cap", "free"}
        What an infinite eta does to a constraint. ``free`` leaves it
        unbounded above, so an all-vacuous run returns zero. ``cap`` uses
        ``eta = 1/4`` instead.
    threads : int, optional
        Workers for the per-direction fan-out.
    net : DeltaNet, optional
        Reuse a prebuilt net instead of building one from ``delta`` and ``seed``.

    Returns
    -------
    sigma_hat : ndarray, shape (d, d)
    diagnostics : Diagnostics
    """
    x = _as_sample(sample)
    n, d = x.shape
    if mode == "paired":
        dropped = n % 2
        x = pair_differences(x)
    elif mode == "centered":
        if n < 2:
            raise ParameterError("centering needs n >= 2")
        dropped = 0
        x = x - x.mean(axis=0)
    else:
        raise ParameterError(f"unknown mode {mode!r}")
    if vacuous not in ("cap", "free"):
        raise ParameterError(f"unknown vacuous policy {vacuous!r}")
    if lambda_mode not in ("grid", "practical", "oracle"):
        raise ParameterError(f"unknown lambda mode {lambda_mode!r}")
    if lambda_mode == "oracle" and (true_cov is None or fourth_moment_root is None):
        raise ParameterError("oracle lambda needs true_cov and fourth_moment_root")

    if net is None:
        net = build_delta_net(d, delta, seed)
    elif not isinstance(net, DeltaNet) or net.dim != d:
        raise ParameterError("net does not match the sample dimension")

    if kappa is None:
        kappa = estimate_kappa(x, net).kappa
    if trace is None:
        trace = _pilot_trace(x, eps, threads)
    if hs_norm is None:
        hs_norm = trace
    params = BoundParams.create(x.shape[0], eps, kappa, trace, hs_norm, net.delta,
                                sigma=sigma, s4=s4, fourth_moment_root=fourth_moment_root)
    eta_cap = VACUOUS_ETA if vacuous == "cap" else None

    def one(theta):
        p = x @ theta
        a = p * p
        if not np.any(a > 0.0):
            return bounds_from_projections(theta, a, params)
        if lambda_mode == "grid":
            grid = default_influence(a, eps)
        elif lambda_mode == "practical":
            grid = InfluenceParams.single(practical_lambda_from_projections(a, eps))
        else:
            energy = float(theta @ true_cov @ theta)
            grid = InfluenceParams.single(oracle_lambda(theta, params, energy))
        return bounds_from_projections(theta, a, params, grid, eta_cap=eta_cap, uncross=True)

    bounds = thread_map(one, net.half(), threads)
    cons = ConstraintSet.from_bounds(bounds)
    q, duals, ok = solve_min_frobenius(cons, tol, max_iter)
    est = positive_part(q)
    diag = Diagnostics(
        net_size=len(net), kappa=float(kappa),
        vacuous_count=sum(b.vacuous for b in bounds), converged=ok,
        iterations=duals.iterations, max_violation=duals.max_violation,
        crossed_count=sum(b.crossed for b in bounds),
        no_signal_count=sum(b.no_signal for b in bounds),
        mode=mode, n_effective=int(x.shape[0]), dropped_rows=int(dropped),
        trace_plugin=float(trace), hs_norm_plugin=float(hs_norm), sigma=params.sigma,
        lambda_mode=lambda_mode, vacuous_policy=vacuous, solver=duals.method,
    )
    return est, diag
