"""Pure numpy implementations of the hot kernels.

Every function here has a twin of the same name and signature in
``_kernels.pyx``. Both follow the same algorithm step for step so the two
backends agree to rounding; ``_backend`` picks one at import time.
"""

import math

import numpy as np

LOG2 = math.log(2.0)


def psi(t):
    """Influence function, elementwise. Odd, non-decreasing, saturates at log 2."""
    t = np.asarray(t, dtype=float)
    u = np.minimum(np.abs(t), 1.0)
    return np.sign(t) * -np.log1p(-u + 0.5 * u * u)


def psi_prime(t):
    t = np.asarray(t, dtype=float)
    u = np.abs(t)
    out = np.zeros_like(u)
    inside = u < 1.0
    ui = u[inside]
    out[inside] = (1.0 - ui) / (1.0 - ui + 0.5 * ui * ui)
    return out


def psi_sum(a, beta, lam):
    """Return ``sum(psi(beta * a - lam))``."""
    return float(np.sum(psi(beta * np.asarray(a) - lam)))


def psi_sum_slope(a, beta, lam):
    """Value and beta-derivative of ``sum(psi(beta * a - lam))``."""
    a = np.asarray(a)
    t = beta * a - lam
    return float(np.sum(psi(t))), float(np.sum(a * psi_prime(t)))


def solve_beta(a, lam, lo, hi, tol, max_iter):
    """Root of ``beta -> sum(psi(beta * a - lam))`` inside a sign bracket.

    ``lo`` must give a non-positive sum. ``hi`` is doubled until the sum is
    non-negative. Newton steps are taken when they stay strictly inside the
    current bracket, bisection otherwise; the bisection point is geometric
    while ``hi > 4 lo`` so that brackets spanning many decades shrink fast.

    Returns ``(beta, residual, iterations)`` for the last evaluated ``beta``.
    """
    a = np.ascontiguousarray(a, dtype=float)
    n = a.shape[0]
    target = n * tol
    s_lo = psi_sum(a, lo, lam)
    if abs(s_lo) <= target:
        return lo, s_lo, 0
    s_hi = psi_sum(a, hi, lam)
    expansions = 0
    while s_hi < 0.0:
        lo, s_lo = hi, s_hi
        hi *= 2.0
        s_hi = psi_sum(a, hi, lam)
        expansions += 1
        if expansions > 2000:
            raise ArithmeticError("bracket expansion failed")
    if abs(s_hi) <= target:
        return hi, s_hi, 0

    mean = float(np.mean(a))
    beta = lam / mean if mean > 0.0 else 0.5 * (lo + hi)
    if not lo < beta < hi:
        beta = 0.5 * (lo + hi)
    s = s_lo
    for it in range(1, max_iter + 1):
        s, ds = psi_sum_slope(a, beta, lam)
        if abs(s) <= target:
            return beta, s, it
        if s < 0.0:
            lo = beta
        else:
            hi = beta
        if hi - lo <= 4.0 * np.finfo(float).eps * hi or it == max_iter:
            return beta, s, it
        nb = beta - s / ds if ds > 0.0 else lo
        if not lo < nb < hi:
            # geometric midpoint while the bracket spans decades
            nb = math.sqrt(lo) * math.sqrt(hi) if hi > 4.0 * lo else 0.5 * (lo + hi)
        beta = nb
    return beta, s, max_iter


def jacobi_eigh(m, tol, max_sweeps):
    """Cyclic Jacobi diagonalisation of a symmetric matrix.

    Returns ``(eigenvalues, eigenvectors, sweeps)`` with eigenvalues in the
    order they sit on the final diagonal (unsorted).
    """
    a = np.array(m, dtype=float, copy=True)
    d = a.shape[0]
    v = np.eye(d)
    scale = math.sqrt(float(np.sum(a * a)))
    sweeps = 0
    for sweeps in range(max_sweeps + 1):
        off = math.sqrt(float(np.sum((a - np.diag(np.diag(a))) ** 2)))
        if off <= tol * scale or sweeps == max_sweeps:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if abs(apq) <= 1e-18 * (abs(a[p, p]) + abs(a[q, q])):
                    a[p, q] = a[q, p] = 0.0
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q]
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap = a[p, :].copy()
                aq = a[q, :]
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    return np.diag(a).copy(), v, sweeps


def _violation(thetas, lower, upper, q):
    s = np.einsum("ij,jk,ik->i", thetas, q, thetas)
    viol = np.maximum(lower - s, s - upper)
    return float(max(np.max(viol), 0.0)) if viol.size else 0.0


def _gap(thetas, lower, upper, q, xi_p, xi_m):
    """Complementary-slackness residual; bounds half the squared distance to the optimum."""
    s = np.einsum("ji,ik,jk->j", thetas, q, thetas)
    lo = np.where(xi_p > 0.0, np.abs(s - lower), 0.0)
    hi = np.where(xi_m > 0.0, np.abs(upper - s), 0.0)
    return float(np.sum(xi_p * lo) + np.sum(xi_m * hi))


def dykstra(thetas, lower, upper, tol, max_iter):
    """Minimum-Frobenius symmetric matrix with ``lower <= t' Q t <= upper``.

    Dykstra's algorithm over the half-spaces of symmetric matrices cut out by
    each finite bound. The correction attached to each half-space is a
    multiple of ``t t'``; those multiples are the dual weights, so at every
    step ``Q == sum((xi_plus - xi_minus) t t')``.

    Converged means the violation, the last sweep's movement and the
    complementary-slackness gap are all small; movement alone can stall far
    from the optimum when many constraints are nearly parallel.

    Returns ``(Q, xi_plus, xi_minus, sweeps, converged, max_violation)``. On
    non-convergence ``Q`` and the weights are from the sweep with the smallest
    violation.
    """
    thetas = np.ascontiguousarray(thetas, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    m, d = thetas.shape
    q = np.zeros((d, d))
    xi_p = np.zeros(m)
    xi_m = np.zeros(m)
    outer = [np.outer(t, t) for t in thetas]
    norm2 = np.sum(thetas * thetas, axis=1) ** 2
    has_lo = np.isfinite(lower)
    has_hi = np.isfinite(upper)

    best = (q.copy(), xi_p.copy(), xi_m.copy(), math.inf)
    sweeps = 0
    viol = math.inf
    for sweeps in range(1, max_iter + 1):
        q_old = q.copy()
        for j in range(m):
            if norm2[j] == 0.0:
                continue
            th = thetas[j]
            if has_lo[j]:
                s = float(th @ q @ th)
                t = max(0.0, (lower[j] - (s - xi_p[j] * norm2[j])) / norm2[j])
                q += (t - xi_p[j]) * outer[j]
                xi_p[j] = t
            if has_hi[j]:
                s = float(th @ q @ th)
                u = max(0.0, ((s + xi_m[j] * norm2[j]) - upper[j]) / norm2[j])
                q += (xi_m[j] - u) * outer[j]
                xi_m[j] = u
        move = math.sqrt(float(np.sum((q - q_old) ** 2)))
        viol = _violation(thetas, lower, upper, q)
        if viol <= best[3]:
            best = (q.copy(), xi_p.copy(), xi_m.copy(), viol)
        if viol <= tol and move <= tol and _gap(thetas, lower, upper, q, xi_p, xi_m) <= tol * (
                1.0 + float(np.sum(q * q))):
            return q, xi_p, xi_m, sweeps, True, viol
    q, xi_p, xi_m, viol = best
    return q, xi_p, xi_m, sweeps, False, viol
