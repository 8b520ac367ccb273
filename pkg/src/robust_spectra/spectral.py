"""Spectral toolkit: Jacobi eigensolver, deviation-bound functions, spectral
cut-offs, top-r projectors, the shrunk estimator and the PCA error bounds.

Bound functions return ``math.inf`` for vacuous regimes and every downstream
bound propagates it instead of raising.
"""

from dataclasses import dataclass, field
import logging
import math
import warnings

import numpy as np

from . import _backend
from .errors import ParameterError

log = logging.getLogger(__name__)

INF = math.inf

# constants of the energy deviation bound
_C_VAR = 2.032
_C_TRACE = 0.73
_C_CONF = 4.35
_C_BIAS = 98.5


class TieWarning(UserWarning):
    """Eigenvalues at a projector cut coincide, so the projector is not unique."""


# ---------------------------------------------------------------------------
# eigendecomposition


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues in descending order with eigenvectors as matching columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    sweeps: int = 0

    @property
    def dim(self):
        return self.eigenvalues.shape[0]

    def reconstruct(self, values=None):
        """``V diag(values) V'``, defaulting to the stored eigenvalues."""
        w = self.eigenvalues if values is None else np.asarray(values, dtype=float)
        v = self.eigenvectors
        out = (v * w) @ v.T
        return 0.5 * (out + out.T)


def as_symmetric(m, name="matrix", tol=1e-12):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ParameterError(f"{name} must be square, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ParameterError(f"{name} has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if m.size and float(np.max(np.abs(m - m.T))) > tol * scale:
        raise ParameterError(f"{name} is not symmetric")
    return 0.5 * (m + m.T)


def eigh(m, tol=1e-12, max_sweeps=100):
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius mass is at most
    ``tol * ||m||_HS``.
    """
    m = as_symmetric(m)
    w, v, sweeps = _backend.jacobi_eigh(m, tol, max_sweeps)
    order = np.argsort(-w, kind="stable")
    return Spectrum(w[order], np.ascontiguousarray(v[:, order]), int(sweeps))


# ---------------------------------------------------------------------------
# deviation-bound functions


def sigma_cap(n, eps, kappa, trace):
    """Largest admissible threshold, or ``inf`` when the denominator is not positive."""
    denom = n / 128.0 - _C_CONF - math.log(1.0 / eps)
    if denom <= 0.0:
        return INF
    return 100.0 * kappa * trace / denom


@dataclass(frozen=True)
class BoundParams:
    """Inputs of gamma, eta and B.

    Attributes
    ----------
    n : int
        Sample size the robust estimator saw (after pairing, if any).
    eps : float
        Confidence level, in (0, 1/2).
    kappa : float
        Directional kurtosis bound, at least 3/2.
    trace, hs_norm : float
        Plug-ins for ``Tr(Sigma)`` and ``||Sigma||_HS``.
    sigma : float
        Threshold flooring small energies. Must respect :func:`sigma_cap`.
    delta : float
        Radius of the net the estimator used.
    s4 : float
        Saturation level in ``eta(min(t, s4))``. ``inf`` disables it.
    fourth_moment_root : float, optional
        ``E[||X||^4]^(1/2)``, only needed by the oracle lambda.
    """

    n: int
    eps: float
    kappa: float
    trace: float
    hs_norm: float
    sigma: float
    delta: float = 0.0
    s4: float = INF
    fourth_moment_root: float | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError("n must be positive")
        if not 0.0 < self.eps < 0.5:
            raise ParameterError("eps must lie in (0, 1/2)")
        if not self.kappa >= 1.5:
            raise ParameterError("kappa must be at least 3/2")
        if self.trace < 0.0 or self.hs_norm < 0.0 or self.delta < 0.0:
            raise ParameterError("trace, hs_norm and delta must be non-negative")
        if not self.sigma > 0.0:
            raise ParameterError("sigma must be positive")
        cap = sigma_cap(self.n, self.eps, self.kappa, self.trace)
        if self.sigma > cap * (1.0 + 1e-12):
            raise ParameterError(f"sigma={self.sigma} exceeds its cap {cap}")

    @classmethod
    def create(cls, n, eps, kappa, trace, hs_norm=None, delta=0.0, sigma=None,
               s4=INF, fourth_moment_root=None):
        """Fill in defaults: ``hs_norm = trace`` and sigma at half its cap.

        When the cap is unbounded (tiny ``n``) sigma falls back to
        ``50 * kappa * trace``, the half-cap with a unit denominator.
        """
        kappa = max(float(kappa), 1.5)
        if hs_norm is None:
            hs_norm = trace
        if sigma is None:
            cap = sigma_cap(n, eps, kappa, trace)
            sigma = 0.5 * cap if math.isfinite(cap) else 50.0 * kappa * trace
            if sigma <= 0.0:
                sigma = np.finfo(float).tiny
        return cls(int(n), float(eps), kappa, float(trace), float(hs_norm),
                   float(sigma), float(delta), float(s4), fourth_moment_root)

    def to_dict(self):
        return {k: (None if v is None else (float(v) if k != "n" else int(v)))
                for k, v in self.__dict__.items()}


def gamma(t, p):
    """Relative deviation scale at energy level ``t > 0``."""
    t = float(t)
    if not t > 0.0:
        raise ParameterError(f"gamma needs t > 0, got {t}")
    log_eps = math.log(1.0 / p.eps)
    first = math.sqrt(_C_VAR * (p.kappa - 1.0) / p.n
                      * (_C_TRACE * p.trace / t + _C_CONF + log_eps))
    second = math.sqrt(_C_BIAS * p.kappa * p.trace / (p.n * t))
    return first + second


def eta_from_gamma(g, kappa):
    """``g / (1 - 4 g)`` when ``(6 + 1/(kappa - 1)) g <= 1``, else ``inf``."""
    if (6.0 + 1.0 / (kappa - 1.0)) * g <= 1.0:
        return g / (1.0 - 4.0 * g)
    return INF


def eta(t, p):
    t = float(t)
    if t < 0.0:
        raise ParameterError(f"eta needs t >= 0, got {t}")
    return eta_from_gamma(gamma(max(t, p.sigma), p), p.kappa)


def bound_b(t, p):
    """Eigenvalue deviation bound ``B(t)``."""
    t = float(t)
    if t < 0.0:
        raise ParameterError(f"B needs t >= 0, got {t}")
    e = eta(min(t, p.s4), p)
    if math.isinf(e):
        return INF
    return 2.0 * max(t, p.sigma) * e + 5.0 * p.delta * p.hs_norm + p.sigma


@dataclass
class DeviationReport:
    """Per-index outcome of :func:`eigenvalue_deviation_check`."""

    rows: list
    passed: bool
    vacuous: bool

    def to_json(self):
        return [
            {"index": r["index"], "deviation": r["deviation"],
             "bound": _json_float(r["bound"]), "pass": r["pass"]}
            for r in self.rows
        ]


def _json_float(x):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def eigenvalue_deviation_check(true_spec, est_spec, p):
    """Compare true and estimated eigenvalues against both deviation bounds.

    For each index four inequalities are checked: the plain deviation against
    ``B`` at the true and at the estimated eigenvalue, and the sigma-floored
    deviation against its two bounds. The ``bound`` reported per row is the
    tighter of the two plain bounds.
    """
    lam = np.maximum(np.asarray(true_spec.eigenvalues, dtype=float), 0.0)
    hat = np.maximum(np.asarray(est_spec.eigenvalues, dtype=float), 0.0)
    if lam.shape != hat.shape:
        raise ParameterError("spectra have different dimensions")
    slack = 5.0 * p.delta * p.hs_norm
    rows = []
    for i, (l, h) in enumerate(zip(lam, hat)):
        dev = abs(l - h)
        b_true, b_est = bound_b(l, p), bound_b(h, p)
        fdev = abs(max(l, p.sigma) - max(h, p.sigma))
        e_true, e_est = eta(l, p), eta(min(h, p.s4), p)
        f_true = 2.0 * max(l, p.sigma) * e_true + slack if math.isfinite(e_true) else INF
        f_est = 2.0 * max(h, p.sigma) * e_est + slack if math.isfinite(e_est) else INF
        ok = dev <= b_true and dev <= b_est and fdev <= f_true and fdev <= f_est
        bound = min(b_true, b_est)
        rows.append({
            "index": i, "deviation": float(dev), "bound": float(bound),
            "bound_true": float(b_true), "bound_est": float(b_est),
            "floored_deviation": float(fdev), "floored_bound_true": float(f_true),
            "floored_bound_est": float(f_est), "margin": float(bound - dev),
            "pass": bool(ok), "vacuous": not math.isfinite(bound),
        })
    return DeviationReport(rows, all(r["pass"] for r in rows),
                           all(r["vacuous"] for r in rows))


# ---------------------------------------------------------------------------
# spectral functions


@dataclass(frozen=True)
class CutoffSpec:
    """Piecewise-linear scalar function through ``knots``, constant outside them.

    ``lipschitz_inv`` is ``L``: the function is ``1/L``-Lipschitz.
    """

    knots: tuple
    lipschitz_inv: float

    def __post_init__(self):
        k = np.asarray(self.knots, dtype=float).reshape(-1, 2)
        if k.shape[0] == 0:
            raise ParameterError("a cut-off needs at least one knot")
        if np.any(np.diff(k[:, 0]) <= 0.0):
            raise ParameterError("knot abscissae must be strictly ascending")
        if not self.lipschitz_inv > 0.0:
            raise ParameterError("lipschitz_inv must be positive")
        slopes = np.abs(np.diff(k[:, 1]) / np.diff(k[:, 0])) if k.shape[0] > 1 else np.zeros(0)
        steepest = float(np.max(slopes)) if slopes.size else 0.0
        if steepest > 0.0 and steepest * self.lipschitz_inv > 1.0 + 1e-12:
            raise ParameterError("knots are steeper than 1/lipschitz_inv")
        object.__setattr__(self, "knots", tuple(map(tuple, k.tolist())))

    @classmethod
    def from_knots(cls, knots):
        """Use the steepest segment to set the Lipschitz constant."""
        k = np.asarray(knots, dtype=float).reshape(-1, 2)
        slope = 0.0
        if k.shape[0] > 1:
            slope = float(np.max(np.abs(np.diff(k[:, 1]) / np.diff(k[:, 0]))))
        return cls(tuple(map(tuple, k.tolist())), INF if slope == 0.0 else 1.0 / slope)

    @property
    def lipschitz(self):
        return 1.0 / self.lipschitz_inv

    def __call__(self, x):
        k = np.asarray(self.knots)
        return np.interp(np.asarray(x, dtype=float), k[:, 0], k[:, 1])


def apply_spectral_function(m, f):
    """``f(M) = sum f(lambda_i) p_i p_i'``."""
    spec = m if isinstance(m, Spectrum) else eigh(m)
    return spec.reconstruct(f(spec.eigenvalues))


def _tie_at(values, r, tol=1e-12):
    return r < values.shape[0] and abs(values[r - 1] - values[r]) <= tol


def projector_top_r(m, r):
    """Orthogonal projector on the ``r`` leading eigenvectors.

    Emits :class:`TieWarning` when the r-th and (r+1)-th eigenvalues coincide.
    """
    spec = m if isinstance(m, Spectrum) else eigh(m)
    d = spec.dim
    if not (isinstance(r, (int, np.integer)) and 1 <= r <= d):
        raise ParameterError(f"r must be an integer in [1, {d}], got {r!r}")
    if _tie_at(spec.eigenvalues, r):
        warnings.warn(f"eigenvalues {r} and {r + 1} tie; projector is not unique",
                      TieWarning, stacklevel=2)
    v = spec.eigenvectors[:, :r]
    out = v @ v.T
    return 0.5 * (out + out.T)


def step_compatible_cutoff(lambda_r, lambda_r1):
    """Ramp from 0 at ``lambda_r1`` to 1 at ``lambda_r``.

    Agrees with the top-r projector on any spectrum that avoids the open gap.
    """
    gap = float(lambda_r) - float(lambda_r1)
    if not gap > 0.0:
        raise ParameterError(f"eigengap must be positive, got {gap}")
    return CutoffSpec(((float(lambda_r1), 0.0), (float(lambda_r), 1.0)), gap)


def _pair(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ParameterError(f"shape mismatch {a.shape} vs {b.shape}")
    return a, b


def operator_distance(a, b):
    """Largest absolute eigenvalue of ``a - b``."""
    a, b = _pair(a, b)
    w = eigh(0.5 * ((a - b) + (a - b).T)).eigenvalues
    return float(np.max(np.abs(w))) if w.size else 0.0


def frobenius_distance(a, b):
    a, b = _pair(a, b)
    return float(np.sqrt(np.sum((a - b) ** 2)))


def overlap_frobenius_distance(spec_a, spec_b):
    """Frobenius distance via ``sum (mu_i - mu'_k)^2 <p_i, q_k>^2``."""
    diff = spec_a.eigenvalues[:, None] - spec_b.eigenvalues[None, :]
    overlap = spec_a.eigenvectors.T @ spec_b.eigenvectors
    return float(np.sqrt(np.sum(diff ** 2 * overlap ** 2)))


def shrunk_eigenvalues(values, p):
    """``[lambda - B(lambda)]_+``; infinite ``B`` sends the value to zero."""
    out = np.empty(len(values))
    for i, v in enumerate(values):
        b = bound_b(max(float(v), 0.0), p)
        out[i] = max(float(v) - b, 0.0) if math.isfinite(b) else 0.0
    return out


def shrunk_estimator(est, p):
    """Keep the eigenvectors of ``est`` and shrink each eigenvalue by ``B``."""
    spec = est if isinstance(est, Spectrum) else eigh(est)
    values = shrunk_eigenvalues(spec.eigenvalues, p)
    if any(not math.isfinite(bound_b(max(float(v), 0.0), p)) for v in spec.eigenvalues):
        log.warning("vacuous deviation bound: shrunk eigenvalues set to zero")
    return spec.reconstruct(values)


# ---------------------------------------------------------------------------
# PCA error bounds


def projector_bound(r, gap, b_lambda1):
    """``sqrt(2 r) B(lambda_1) / gap`` bound on the top-r projector error."""
    if r < 1:
        raise ParameterError("r must be >= 1")
    if not gap > 0.0:
        raise ParameterError("gap must be positive")
    if math.isinf(b_lambda1):
        return INF
    return math.sqrt(2.0 * r) * b_lambda1 / gap


@dataclass(frozen=True)
class CutoffBound:
    bound: float
    tau_star: int
    worst_case: float
    worst_case_tau: int
    b_lambda1: float
    values: tuple = field(default=(), repr=False)


def _b_lambda1(spectrum, p, b1):
    if b1 is not None:
        return float(b1)
    return bound_b(max(float(spectrum.eigenvalues[0]), 0.0), p)


def _tails(spectrum):
    lam = np.maximum(np.asarray(spectrum.eigenvalues, dtype=float), 0.0)
    sq = lam ** 2
    # tails[tau - 1] = sum_{i > tau} lambda_i^2 for tau = 1..d
    return np.concatenate([np.cumsum(sq[::-1])[::-1][1:], [0.0]]), float(lam.sum())


def cutoff_operator_bound(spectrum, p, L_inv, b1=None):
    """Operator-norm bound for ``f(Sigma) - f(Sigma_hat)`` over ``tau = 1..d``.

    Also reports the closed-form worst case ``2 L^-1 sqrt(sqrt2 Tr B + B^2)``
    and its ``tau = ceil(Tr / (sqrt2 B))``. Pass ``b1`` to override
    ``B(lambda_1)``.
    """
    b = _b_lambda1(spectrum, p, b1)
    tails, tr = _tails(spectrum)
    if math.isinf(b):
        return CutoffBound(INF, 1, INF, 1, b)
    tau = np.arange(1, tails.shape[0] + 1)
    vals = L_inv * (b + np.sqrt(4.0 * tau * b * b + 2.0 * tails))
    k = int(np.argmin(vals))
    wc = 2.0 * L_inv * math.sqrt(math.sqrt(2.0) * tr * b + b * b)
    wc_tau = math.ceil(tr / (math.sqrt(2.0) * b)) if b > 0.0 else 0
    return CutoffBound(float(vals[k]), k + 1, wc, wc_tau, b, tuple(vals.tolist()))


def cutoff_frobenius_bound(spectrum, p, L_inv, b1=None):
    """Frobenius bound for ``f(Sigma) - f(Sigma_tilde)``, same conventions."""
    b = _b_lambda1(spectrum, p, b1)
    tails, tr = _tails(spectrum)
    if math.isinf(b):
        return CutoffBound(INF, 1, INF, 1, b)
    tau = np.arange(1, tails.shape[0] + 1)
    vals = L_inv * np.sqrt(13.0 * tau * b * b + 2.0 * tails)
    k = int(np.argmin(vals))
    wc = L_inv * math.sqrt(11.0 * tr * b + 13.0 * b * b)
    wc_tau = math.ceil(math.sqrt(2.0 / 13.0) * tr / b) if b > 0.0 else 0
    return CutoffBound(float(vals[k]), k + 1, wc, wc_tau, b, tuple(vals.tolist()))


@dataclass
class OverlapReport:
    first: np.ndarray
    second: np.ndarray
    first_limit: float
    second_limit: float

    @property
    def passed(self):
        return bool(np.all(self.first <= self.first_limit)
                    and np.all(self.second <= self.second_limit))

    @property
    def margins(self):
        return self.first_limit - self.first, self.second_limit - self.second


def overlap_sum_check(true_spec, est_spec, b1):
    """Per ``k``: ``sum_i (l_i - l_k)^2 <q_k,p_i>^2`` against ``2 b1^2`` and
    ``sum_i (l_i - lhat_k)^2 <q_k,p_i>^2`` against ``b1^2``."""
    lam = true_spec.eigenvalues
    hat = est_spec.eigenvalues
    if lam.shape != hat.shape:
        raise ParameterError("spectra have different dimensions")
    ov = (true_spec.eigenvectors.T @ est_spec.eigenvectors) ** 2  # ov[i, k]
    first = np.sum((lam[:, None] - lam[None, :]) ** 2 * ov, axis=0)
    second = np.sum((lam[:, None] - hat[None, :]) ** 2 * ov, axis=0)
    return OverlapReport(first, second, 2.0 * b1 * b1, b1 * b1)
