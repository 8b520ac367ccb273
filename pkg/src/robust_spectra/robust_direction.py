"""Per-direction robust estimation of the energy ``theta' Sigma theta``.

Squared projections ``a_i = <theta, X_i>^2`` are fed to the root equation
``sum psi(beta * a_i - lam) = 0``; the point estimate is ``lam / beta``.
Confidence intervals use the multiplicative surrogate ``E * (1 -+ 2 eta)``.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import _backend
from .errors import (DegenerateDirectionError, NoSignalError, NumericalError,
                     ParameterError)
from .spectral import INF, eta

LOG2 = math.log(2.0)
DEFAULT_TOL = 1e-10
GRID_SIZE = 15
GRID_SPAN = 10.0


def psi(t):
    """Influence function: ``log 2`` above 1, ``-log(1 - t + t^2/2)`` on [0, 1], odd.

    Scalars in, scalars out; arrays are mapped elementwise.
    """
    out = _backend.psi(np.asarray(t, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class InfluenceParams:
    """Centering parameter ``lam`` and the grid of candidates it is chosen from."""

    lam: float
    grid: tuple

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float).ravel()
        if not self.lam > 0.0 or not math.isfinite(self.lam):
            raise ParameterError(f"lambda must be positive, got {self.lam}")
        if g.size == 0:
            raise ParameterError("lambda grid is empty")
        if np.any(g <= 0.0) or not np.all(np.isfinite(g)):
            raise ParameterError("lambda grid must be positive and finite")
        if np.any(np.diff(g) <= 0.0):
            raise ParameterError("lambda grid must be strictly ascending")
        object.__setattr__(self, "grid", tuple(g.tolist()))

    @classmethod
    def single(cls, lam):
        return cls(float(lam), (float(lam),))

    @classmethod
    def log_grid(cls, center, size=GRID_SIZE, span=GRID_SPAN):
        """``size`` log-spaced values over ``[center/span, center*span]``."""
        if size == 1:
            return cls.single(center)
        grid = np.geomspace(center / span, center * span, size)
        return cls(float(center), tuple(grid.tolist()))

    def center_index(self):
        """Index of the grid value nearest ``lam`` on a log scale."""
        g = np.asarray(self.grid)
        return int(np.argmin(np.abs(np.log(g) - math.log(self.lam))))


@dataclass(frozen=True)
class DirectionBound:
    """Interval ``[b_minus, b_plus]`` for ``theta' Sigma theta``.

    ``vacuous`` marks the case where eta was infinite at every grid value:
    then ``b_plus`` is ``inf`` and ``b_minus`` is 0 unless an eta cap was
    applied. ``crossed`` marks a best lower end above the best upper end.
    ``estimates`` holds the point estimate at each grid value.
    """

    theta: np.ndarray = field(repr=False)
    b_minus: float
    b_plus: float
    lambda_minus: float
    lambda_plus: float
    point_estimate: float
    vacuous: bool = False
    no_signal: bool = False
    crossed: bool = False
    estimates: tuple = field(default=(), repr=False)

    @property
    def contains_estimate(self):
        return self.b_minus <= self.point_estimate <= self.b_plus


@dataclass(frozen=True)
class KurtosisEstimate:
    """``kappa`` is floored at 3/2; ``raw`` is the unfloored maximum ratio."""

    kappa: float
    raw: float
    directions_used: int


def _check_theta(theta, d):
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.shape[0] != d:
        raise ParameterError(f"theta has length {theta.shape[0]}, sample has {d} columns")
    if abs(float(np.linalg.norm(theta)) - 1.0) > 1e-12:
        raise ParameterError("theta must be a unit vector")
    return theta


def projections(theta, sample):
    """Squared projections ``<theta, X_i>^2``."""
    sample = np.asarray(sample, dtype=float)
    if sample.ndim != 2 or sample.shape[0] == 0:
        raise ParameterError("sample must be a non-empty n x d array")
    theta = _check_theta(theta, sample.shape[1])
    p = sample @ theta
    return p * p


def empirical_truncated_moment(theta, sample, lam):
    """``(1/n) sum psi(<theta, X_i>^2 - lam)``, always within ``[-log 2, log 2]``."""
    a = projections(theta, sample)
    return _backend.psi_sum(a, 1.0, float(lam)) / a.shape[0]


def solve_beta(a, lam, tol=DEFAULT_TOL, max_iter=500):
    """Root ``beta`` of ``sum psi(beta * a_i - lam)`` for squared projections ``a``.

    Raises
    ------
    NoSignalError
        If no root exists, which happens when every ``a_i`` is zero or the
        sum stays negative as ``beta`` grows.
    NumericalError
        If the root would overflow, e.g. for subnormal projections.
    """
    if not lam > 0.0:
        raise ParameterError(f"lambda must be positive, got {lam}")
    if not tol > 0.0:
        raise ParameterError("tol must be positive")
    a = np.ascontiguousarray(a, dtype=float)
    pos = a[a > 0.0]
    if pos.size == 0:
        raise NoSignalError("all projections are zero")
    # limit of the sum as beta -> inf
    zeros = a.shape[0] - pos.shape[0]
    if pos.shape[0] * LOG2 + zeros * psi(-lam) <= 0.0:
        raise NoSignalError("too many zero projections for a root to exist")
    lo = lam / float(pos.max())
    hi = lam / float(np.quantile(pos, 0.25))
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise NumericalError("projections are too small for a representable root")
    try:
        beta, res, its = _backend.solve_beta(a, float(lam), lo, hi, float(tol), int(max_iter))
    except ArithmeticError as exc:
        raise NumericalError(str(exc)) from exc
    if not (math.isfinite(beta) and math.isfinite(res)):
        raise NumericalError("root overflowed; projections are too small")
    if its >= max_iter and abs(res) > a.shape[0] * tol:
        raise NumericalError(f"root solver stopped after {its} iterations, residual {res:.3g}")
    return beta, res


def solve_alpha(theta, sample, lam, tol=DEFAULT_TOL):
    """Positive ``alpha`` with ``|sum psi(alpha^2 <theta, X_i>^2 - lam)| <= n tol``."""
    beta, _ = solve_beta(projections(theta, sample), lam, tol)
    return math.sqrt(beta)


def point_estimate(a, lam, tol=DEFAULT_TOL):
    beta, _ = solve_beta(a, lam, tol)
    return lam / beta


def _practical_from_moments(m, v, n, eps):
    if not 0.0 < eps < 1.0:
        raise ParameterError("eps must lie in (0, 1)")
    c = (2.0 / n) * math.log(1.0 / eps)
    if c >= 1.0:
        raise ParameterError(f"n={n} is too small for eps={eps}")
    return m * math.sqrt(c * (1.0 - c) / v)


def practical_lambda(theta, sample, eps=0.1):
    """Data-driven heuristic ``m sqrt((1/v)(2/n) log(1/eps)(1 - (2/n) log(1/eps)))``.

    ``m`` and ``v`` are the mean and unbiased variance of the squared
    projections.
    """
    return practical_lambda_from_projections(projections(theta, sample), eps)


def practical_lambda_from_projections(a, eps=0.1):
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    if n < 2:
        raise ParameterError("practical lambda needs at least two observations")
    v = float(np.var(a, ddof=1))
    if v == 0.0:
        raise DegenerateDirectionError("squared projections have zero variance")
    return _practical_from_moments(float(np.mean(a)), v, n, eps)


def oracle_lambda(theta, params, energy):
    """Oracle centering parameter for synthetic runs with known moments.

    ``params.fourth_moment_root`` supplies ``E[||X||^4]^(1/2)`` and ``energy``
    is ``theta' Sigma theta``, floored at ``params.sigma``.
    """
    if not params.kappa > 1.0:
        raise ParameterError("oracle lambda needs kappa > 1")
    if energy < 0.0:
        raise ParameterError("energy must be non-negative")
    if params.fourth_moment_root is None:
        raise ParameterError("params.fourth_moment_root is required for the oracle lambda")
    theta = np.asarray(theta, dtype=float)
    t2 = float(theta @ theta)
    k = params.kappa
    inner = (0.73 * params.fourth_moment_root * t2 / (math.sqrt(k) * max(energy, params.sigma))
             + 4.35 + math.log(1.0 / params.eps))
    return math.sqrt(2.0 / (params.n * (k - 1.0)) * inner)


def default_influence(a, eps=0.1):
    """Default grid around the practical lambda of projections ``a``.

    Zero-variance projections make every lambda give the same estimate; the
    grid is then centred on ``sqrt(c (1 - c))``, the heuristic with ``m/sqrt(v)``
    replaced by 1.
    """
    try:
        center = practical_lambda_from_projections(a, eps)
    except DegenerateDirectionError:
        center = _practical_from_moments(1.0, 1.0, np.asarray(a).shape[0], eps)
    if center == 0.0:
        raise NoSignalError("all projections are zero")
    return InfluenceParams.log_grid(center)


def surrogate_interval(estimate, params, eta_cap=None):
    """``estimate * (1 -+ 2 eta(max(estimate, sigma)))`` with the lower end clamped at 0.

    An infinite eta gives ``(0, inf)`` unless ``eta_cap`` replaces it.
    """
    e = eta(max(estimate, params.sigma), params)
    if math.isinf(e):
        if eta_cap is None:
            return 0.0, INF
        e = eta_cap
    return max(estimate * (1.0 - 2.0 * e), 0.0), estimate * (1.0 + 2.0 * e)


def direction_bounds(theta, sample, params, grid=None, tol=DEFAULT_TOL, eta_cap=None,
                     uncross=False):
    """Confidence interval for ``theta' Sigma theta`` optimised over a lambda grid.

    Parameters
    ----------
    theta : array_like
        Unit vector.
    sample : ndarray, shape (n, d)
    params : BoundParams
    grid : InfluenceParams, optional
        Defaults to 15 log-spaced values around the practical lambda.
    eta_cap : float, optional
        Stand-in for an infinite eta. The result is still flagged ``vacuous``
        but gets finite ends.
    uncross : bool
        When the best lower end exceeds the best upper end, fall back to the
        interval of the lambda that gave the best upper end and set
        ``crossed``.

    Returns
    -------
    DirectionBound
        Largest lower end and smallest upper end over the grid. The point
        estimate is taken at the grid value nearest ``grid.lam``. A direction
        with no signal gets ``[0, 0]`` and ``no_signal=True``.
    """
    theta = np.asarray(theta, dtype=float).ravel()
    a = projections(theta, sample)
    return bounds_from_projections(theta, a, params, grid, tol, eta_cap, uncross)


def bounds_from_projections(theta, a, params, grid=None, tol=DEFAULT_TOL, eta_cap=None,
                            uncross=False):
    if not np.any(a > 0.0):
        return DirectionBound(theta, 0.0, 0.0, math.nan, math.nan, 0.0,
                              vacuous=False, no_signal=True)
    if grid is None:
        grid = default_influence(a, params.eps)
    lams = grid.grid
    ests = []
    for lam in lams:
        try:
            ests.append(point_estimate(a, lam, tol))
        except NoSignalError:
            # lam so large that the zero projections outweigh the rest
            ests.append(math.nan)
    if all(math.isnan(e) for e in ests):
        return DirectionBound(theta, 0.0, 0.0, math.nan, math.nan, 0.0,
                              vacuous=False, no_signal=True, estimates=tuple(ests))
    vacuous = all(math.isinf(eta(max(e, params.sigma), params))
                  for e in ests if not math.isnan(e))
    lo_best, hi_best = -INF, INF
    lam_lo = lam_hi = math.nan
    hi_interval = None
    for lam, est in zip(lams, ests):
        if math.isnan(est):
            continue
        lo, hi = surrogate_interval(est, params, eta_cap)
        if not math.isfinite(hi):
            continue
        if lo > lo_best:
            lo_best, lam_lo = lo, lam
        if hi < hi_best:
            hi_best, lam_hi, hi_interval = hi, lam, (lo, hi)
    center = grid.center_index()
    valid = [i for i, e in enumerate(ests) if not math.isnan(e)]
    pick = ests[min(valid, key=lambda i: abs(i - center))]
    if hi_interval is None:
        return DirectionBound(theta, 0.0, INF, math.nan, math.nan, pick,
                              vacuous=True, estimates=tuple(ests))
    crossed = lo_best > hi_best
    if crossed and uncross:
        lo_best, lam_lo = hi_interval[0], lam_hi
    return DirectionBound(theta, lo_best, hi_best, lam_lo, lam_hi, pick,
                          vacuous=vacuous, crossed=crossed, estimates=tuple(ests))


def estimate_kappa(sample, net, chunk=16):
    """Largest empirical ``E<theta,X>^4 / (E<theta,X>^2)^2`` over the net, floored at 3/2."""
    sample = np.asarray(sample, dtype=float)
    if sample.ndim != 2 or sample.shape[0] == 0:
        raise ParameterError("sample must be a non-empty n x d array")
    dirs = net.half() if hasattr(net, "half") else np.asarray(net, dtype=float)
    if len(dirs) == 0:
        raise ParameterError("net is empty")
    raw = -INF
    used = 0
    for start in range(0, len(dirs), chunk):
        p = sample @ dirs[start:start + chunk].T
        p *= p
        m2 = p.mean(axis=0)
        m4 = (p * p).mean(axis=0)
        ok = m2 > 0.0
        used += int(ok.sum())
        if np.any(ok):
            raw = max(raw, float(np.max(m4[ok] / m2[ok] ** 2)))
    if used == 0:
        raise NoSignalError("every net direction has zero second moment")
    return KurtosisEstimate(max(raw, 1.5), raw, used)
