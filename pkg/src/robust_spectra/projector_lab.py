"""Geometry of a pair of orthogonal projectors ``P``, ``Q``.

:func:`analyze_pair` builds an orthonormal eigenbasis of ``P + Q`` ordered as

    x_1..x_m        eigenvalues in (1, 2)
    x_{m+1}..x_2m   partners (P - Q) x_i / |(P - Q) x_i|, eigenvalue 2 - lambda_i
    x_{2m+1}..x_p   eigenvalue 1, in Im(P) & ker(Q)
    x_{p+1}..x_q    eigenvalue 1, in ker(P) & Im(Q)
    x_{q+1}..x_s    eigenvalue 2, in Im(P) & Im(Q)
    x_{s+1}..x_d    eigenvalue 0, in ker(P) & ker(Q)

and the remaining functions derive bases of the images, the rank test and
the operator norm of ``P - Q`` restricted to ``Im(Q)``.
"""

from dataclasses import dataclass, field
import math
from typing import NamedTuple

import numpy as np

from .errors import AnalysisError, ParameterError
from .spectral import as_symmetric, eigh

CLUSTER_TOL = 1e-9
MEMBER_TOL = 1e-6


def make_projector(vectors, dim=None):
    """Orthogonal projector on the span of linearly independent ``vectors``."""
    v = np.asarray(vectors, dtype=float)
    if v.ndim == 1:
        v = v[None, :] if v.size else v.reshape(0, dim or 0)
    if v.shape[0] == 0:
        if dim is None:
            raise ParameterError("dim is required for an empty family")
        return np.zeros((dim, dim))
    if dim is not None and v.shape[1] != dim:
        raise ParameterError(f"vectors have length {v.shape[1]}, expected {dim}")
    if v.shape[0] > v.shape[1]:
        raise ParameterError("more vectors than dimensions")
    q, r = np.linalg.qr(v.T)
    diag = np.abs(np.diag(r))
    if diag.size and np.min(diag) <= 1e-10 * max(1.0, float(np.max(diag))):
        raise ParameterError("vectors are linearly dependent")
    p = q @ q.T
    return 0.5 * (p + p.T)


def _check_projector(m, name, tol=1e-10):
    m = as_symmetric(m, name, tol)
    if float(np.max(np.abs(m @ m - m))) > tol:
        raise ParameterError(f"{name} is not idempotent")
    return m


@dataclass(frozen=True)
class ProjectorPair:
    p: np.ndarray = field(repr=False)
    q: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = _check_projector(self.p, "p")
        q = _check_projector(self.q, "q")
        if p.shape != q.shape:
            raise ParameterError("p and q must have the same shape")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def dim(self):
        return self.p.shape[0]


def numerical_rank(proj):
    """Rank of an orthogonal projector, read off its trace."""
    return int(round(float(np.trace(proj))))


@dataclass(frozen=True)
class PairAnalysis:
    """Block-ordered eigenbasis of ``P + Q``.

    ``basis`` holds ``x_1..x_d`` as columns. ``m``, ``p_idx``, ``q_idx``,
    ``s_idx`` are the 1-based block ends described in the module docstring.
    """

    basis: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray
    m: int
    p_idx: int
    q_idx: int
    s_idx: int

    @property
    def dim(self):
        return self.eigenvalues.shape[0]


def _split_unit_eigenspace(x1, p):
    """Split an eigenvalue-1 basis into its Im(P) and ker(P) parts."""
    k = x1.shape[1]
    if k == 0:
        return x1, x1
    spec = eigh(x1.T @ p @ x1)
    w = spec.eigenvalues
    bad = np.where((np.abs(w) > MEMBER_TOL) & (np.abs(w - 1.0) > MEMBER_TOL))[0]
    if bad.size:
        raise AnalysisError("eigenvalue-1 space is not split by P", index=int(bad[0]))
    y = x1 @ spec.eigenvectors
    in_p = w > 0.5
    return y[:, in_p], y[:, ~in_p]


def analyze_pair(pair, tol=CLUSTER_TOL):
    """Eigenstructure of ``P + Q`` in the paired, block-ordered basis.

    Eigenvalues within ``tol`` of 0, 1 or 2 are snapped to that value; others
    are paired ``lambda <-> 2 - lambda``. Membership of each vector in the
    subspace its eigenvalue predicts is verified.

    Raises
    ------
    AnalysisError
        With the offending index (0-based, in the eigensolver's order) when a
        vector fails its membership check or pairing breaks down.
    """
    p, q = pair.p, pair.q
    d = pair.dim
    spec = eigh(p + q)
    lam = spec.eigenvalues
    vec = spec.eigenvectors

    def member(i, cond, what):
        if not cond:
            raise AnalysisError(f"eigenvector {i} (eigenvalue {lam[i]:.3g}) is not {what}",
                                index=i)

    upper, lower, ones, twos, zeros = [], [], [], [], []
    for i, l in enumerate(lam):
        x = vec[:, i]
        if abs(l) <= tol:
            member(i, np.linalg.norm(p @ x) <= MEMBER_TOL and np.linalg.norm(q @ x) <= MEMBER_TOL,
                   "in ker(P) & ker(Q)")
            zeros.append(i)
        elif abs(l - 2.0) <= tol:
            member(i, np.linalg.norm(p @ x - x) <= MEMBER_TOL
                   and np.linalg.norm(q @ x - x) <= MEMBER_TOL, "in Im(P) & Im(Q)")
            twos.append(i)
        elif abs(l - 1.0) <= tol:
            ones.append(i)
        elif 1.0 < l < 2.0:
            upper.append(i)
        elif 0.0 < l < 1.0:
            lower.append(i)
        else:
            raise AnalysisError(f"eigenvalue {l} of P + Q outside [0, 2]", index=i)
    if len(upper) != len(lower):
        raise AnalysisError("eigenvalues in (0,1) and (1,2) do not pair up",
                            index=(upper or lower)[0])

    diff = p - q
    partners = []
    for i in upper:
        y = diff @ vec[:, i]
        ny = float(np.linalg.norm(y))
        member(i, ny > MEMBER_TOL, "moved by P - Q")
        y /= ny
        resid = float(np.linalg.norm((p + q) @ y - (2.0 - lam[i]) * y))
        member(i, resid <= MEMBER_TOL, "paired with an eigenvector at 2 - lambda")
        partners.append(y)

    in_p, in_q = _split_unit_eigenspace(vec[:, ones], p)
    for k in range(in_p.shape[1]):
        member(ones[0], np.linalg.norm(q @ in_p[:, k]) <= MEMBER_TOL, "in ker(Q)")
    for k in range(in_q.shape[1]):
        member(ones[0], np.linalg.norm(q @ in_q[:, k] - in_q[:, k]) <= MEMBER_TOL, "in Im(Q)")

    m = len(upper)
    blocks = [vec[:, upper],
              np.array(partners).T.reshape(d, m),
              in_p, in_q, vec[:, twos], vec[:, zeros]]
    basis = np.concatenate(blocks, axis=1)
    values = np.concatenate([lam[upper], 2.0 - lam[upper],
                             np.ones(in_p.shape[1] + in_q.shape[1]),
                             np.full(len(twos), 2.0), np.zeros(len(zeros))])
    p_idx = 2 * m + in_p.shape[1]
    q_idx = p_idx + in_q.shape[1]
    s_idx = q_idx + len(twos)
    return PairAnalysis(basis, values, m, p_idx, q_idx, s_idx)


def induced_bases(analysis, pair, tol=1e-8):
    """Orthogonal bases of Im(P) and Im(Q) built from the block-ordered basis.

    ``(P x_1..P x_m, x_{2m+1}..x_p, x_{q+1}..x_s)`` for Im(P) and
    ``(Q x_1..Q x_m, x_{p+1}..x_q, x_{q+1}..x_s)`` for Im(Q), returned as
    rows. Each family is checked for non-zero, mutually orthogonal vectors
    whose projector reproduces ``P`` (resp. ``Q``) within ``tol``.
    """
    x = analysis.basis
    m, pi, qi, si = analysis.m, analysis.p_idx, analysis.q_idx, analysis.s_idx
    im_p = np.concatenate([(pair.p @ x[:, :m]).T, x[:, 2 * m:pi].T, x[:, qi:si].T])
    im_q = np.concatenate([(pair.q @ x[:, :m]).T, x[:, pi:qi].T, x[:, qi:si].T])
    for name, fam, target in (("Im(P)", im_p, pair.p), ("Im(Q)", im_q, pair.q)):
        _verify_basis(name, fam, target, tol)
    return im_p, im_q


def _verify_basis(name, fam, target, tol):
    d = target.shape[0]
    if fam.shape[0] == 0:
        if float(np.max(np.abs(target))) > tol:
            raise AnalysisError(f"empty basis for non-zero {name}")
        return
    norms = np.linalg.norm(fam, axis=1)
    if np.any(norms <= tol):
        raise AnalysisError(f"zero vector in {name} basis", index=int(np.argmin(norms)))
    unit = fam / norms[:, None]
    gram = unit @ unit.T - np.eye(fam.shape[0])
    if float(np.max(np.abs(gram))) > tol:
        i, _ = np.unravel_index(int(np.argmax(np.abs(gram))), gram.shape)
        raise AnalysisError(f"{name} basis is not orthogonal", index=int(i))
    if float(np.max(np.abs(unit.T @ unit - target))) > tol or fam.shape[1] != d:
        raise AnalysisError(f"{name} basis does not span the image")


def rank_criterion(analysis, pair=None):
    """``rk(P) == rk(Q)`` read off the block ends: ``p - 2m == q - p``.

    With ``pair`` given, the answer is cross-checked against the numerical
    ranks and a disagreement raises :class:`AnalysisError`.
    """
    same = analysis.p_idx - 2 * analysis.m == analysis.q_idx - analysis.p_idx
    if pair is not None and same != (numerical_rank(pair.p) == numerical_rank(pair.q)):
        raise AnalysisError("rank criterion disagrees with numerical ranks")
    return same


class NormRestriction(NamedTuple):
    """Operator norm of ``P - Q`` and its supremum over unit vectors of Im(Q).

    ``on_imq`` is NaN when the ranks differ and the comparison does not apply.
    """

    global_norm: float
    on_imq: float

    @property
    def applicable(self):
        return not math.isnan(self.on_imq)


def norm_restriction_check(pair, probes=0, seed=0):
    """``||P - Q||`` against ``sup_{theta in Im(Q), |theta| = 1} ||(P - Q) theta||``.

    Both are exact: the top eigenvalue of ``(P - Q)^2`` and of its
    compression to Im(Q). ``probes`` random unit vectors of Im(Q) are also
    tried; one exceeding the exact supremum raises :class:`AnalysisError`.
    """
    d2 = (pair.p - pair.q) @ (pair.p - pair.q)
    d2 = 0.5 * (d2 + d2.T)
    top = float(eigh(d2).eigenvalues[0]) if pair.dim else 0.0
    global_norm = math.sqrt(max(top, 0.0))
    if numerical_rank(pair.p) != numerical_rank(pair.q):
        return NormRestriction(global_norm, math.nan)
    qspec = eigh(pair.q)
    u = qspec.eigenvectors[:, qspec.eigenvalues > 0.5]
    if u.shape[1] == 0:
        return NormRestriction(global_norm, 0.0)
    restricted = u.T @ d2 @ u
    on_imq = math.sqrt(max(float(eigh(0.5 * (restricted + restricted.T)).eigenvalues[0]), 0.0))
    if probes:
        rng = np.random.default_rng(seed)
        c = rng.standard_normal((probes, u.shape[1]))
        theta = c @ u.T
        theta /= np.linalg.norm(theta, axis=1, keepdims=True)
        probed = float(np.max(np.linalg.norm(theta @ (pair.p - pair.q), axis=1)))
        if probed > on_imq + 1e-10:
            raise AnalysisError("a probe beat the exact supremum over Im(Q)")
    return NormRestriction(global_norm, on_imq)


# ---------------------------------------------------------------------------
# random pairs and the property suite


def random_orthogonal(d, rng):
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def random_pair(d, rank_p, rank_q, rng):
    """Independent uniformly rotated subspaces of the given ranks."""
    a = random_orthogonal(d, rng)[:, :rank_p]
    b = random_orthogonal(d, rng)[:, :rank_q]
    return ProjectorPair(a @ a.T, b @ b.T)


def structured_pair(d, rng):
    """Random pair with every block of the decomposition potentially present.

    Draws block sizes for shared image, shared kernel, exclusive images and
    generic angle pairs, then rotates the whole configuration.
    """
    sizes = rng.multinomial(d, [0.15, 0.15, 0.15, 0.15, 0.4])
    two, zero, only_p, only_q, generic = (int(s) for s in sizes)
    m = generic // 2
    zero += generic - 2 * m
    w = random_orthogonal(d, rng)
    cols = iter(range(d))
    p_vecs, q_vecs = [], []
    for _ in range(two):
        c = w[:, next(cols)]
        p_vecs.append(c)
        q_vecs.append(c)
    for _ in range(only_p):
        p_vecs.append(w[:, next(cols)])
    for _ in range(only_q):
        q_vecs.append(w[:, next(cols)])
    for _ in range(m):
        e, f = w[:, next(cols)], w[:, next(cols)]
        phi = rng.uniform(0.05, 0.5 * math.pi - 0.05)
        p_vecs.append(e)
        q_vecs.append(math.cos(phi) * e + math.sin(phi) * f)
    return ProjectorPair(make_projector(p_vecs, d), make_projector(q_vecs, d))


def case_residuals(pair, analysis):
    """Largest residual of each case identity over the block-ordered basis.

    Keys: ``zero`` (Px = Qx = 0), ``two`` (Px = Qx = x), ``generic``
    ((P-Q)^2 x = lambda (2 - lambda) x and |Px| = |Qx|), ``unit``
    (x in Im(P) & ker(Q) or ker(P) & Im(Q)), ``pairing`` (distance between the
    eigenvalues of P + Q off {0, 1, 2} and their mirror images ``2 - lambda``).
    """
    p, q = pair.p, pair.q
    x = analysis.basis
    lam = analysis.eigenvalues
    m, pi, qi, si = analysis.m, analysis.p_idx, analysis.q_idx, analysis.s_idx
    d2 = (p - q) @ (p - q)
    out = {"zero": 0.0, "two": 0.0, "generic": 0.0, "unit": 0.0, "pairing": 0.0}
    for i in range(analysis.dim):
        v = x[:, i]
        pv, qv = p @ v, q @ v
        if i < 2 * m:
            r = max(float(np.linalg.norm(d2 @ v - lam[i] * (2.0 - lam[i]) * v)),
                    abs(float(np.linalg.norm(pv) - np.linalg.norm(qv))))
            out["generic"] = max(out["generic"], r)
        elif i < pi:
            out["unit"] = max(out["unit"], float(np.linalg.norm(pv - v)), float(np.linalg.norm(qv)))
        elif i < qi:
            out["unit"] = max(out["unit"], float(np.linalg.norm(pv)), float(np.linalg.norm(qv - v)))
        elif i < si:
            out["two"] = max(out["two"], float(np.linalg.norm(pv - v)),
                             float(np.linalg.norm(qv - v)))
        else:
            out["zero"] = max(out["zero"], float(np.linalg.norm(pv)), float(np.linalg.norm(qv)))
    # pairing is measured on the eigensolver's own values, not the assigned ones
    raw = eigh(p + q).eigenvalues
    inner = raw[(raw > CLUSTER_TOL) & (raw < 2.0 - CLUSTER_TOL) & (np.abs(raw - 1.0) > CLUSTER_TOL)]
    mirrored = np.sort(2.0 - inner)
    if inner.size:
        out["pairing"] = float(np.max(np.abs(np.sort(inner) - mirrored)))
    return out


def run_property_suite(dims=range(2, 9), pairs=500, seed=0):
    """Run every projector-pair check on random pairs.

    Half the pairs per dimension come from :func:`random_pair` with random
    ranks, half from :func:`structured_pair`. Returns a JSON-ready summary.
    """
    rng = np.random.default_rng(seed)
    summary = {"pairs": 0, "max_case_residual": {}, "pairing_ok": True,
               "rank_criterion_ok": True, "norm_restriction_max_gap": 0.0,
               "equal_rank_pairs": 0, "failures": []}
    worst = {"zero": 0.0, "two": 0.0, "generic": 0.0, "unit": 0.0, "pairing": 0.0}
    for d in dims:
        for k in range(pairs):
            if k % 2 == 0:
                pair = random_pair(d, int(rng.integers(0, d + 1)),
                                   int(rng.integers(0, d + 1)), rng)
            else:
                pair = structured_pair(d, rng)
            summary["pairs"] += 1
            try:
                an = analyze_pair(pair)
                induced_bases(an, pair)
                res = case_residuals(pair, an)
                same = rank_criterion(an)
                nr = norm_restriction_check(pair)
            except AnalysisError as exc:
                summary["failures"].append({"dim": d, "pair": k, "error": str(exc)})
                continue
            for key, val in res.items():
                worst[key] = max(worst[key], val)
            if same != (numerical_rank(pair.p) == numerical_rank(pair.q)):
                summary["rank_criterion_ok"] = False
            if nr.applicable:
                summary["equal_rank_pairs"] += 1
                summary["norm_restriction_max_gap"] = max(
                    summary["norm_restriction_max_gap"], abs(nr.global_norm - nr.on_imq))
    summary["max_case_residual"] = worst
    summary["pairing_ok"] = worst["pairing"] <= 1e-9
    return summary
