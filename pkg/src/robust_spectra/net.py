"""Finite delta-nets of the unit sphere.

A net is built by greedy farthest-point selection over a pool of random unit
vectors, measuring distance up to sign, and then closed under ``x -> -x``.
Covering is checked by Monte Carlo probing, not certified.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import ParameterError

_MIN_POOL = 10_000
_MAX_POOL = 200_000


@dataclass(frozen=True)
class DeltaNet:
    """Unit vectors such that every point of the sphere is within ``delta`` of one.

    Attributes
    ----------
    dim : int
    delta : float
    points : ndarray, shape (m, dim)
        Antipodal pairs are stored next to each other: ``points[2k + 1] ==
        -points[2k]``.
    seed : int or None
        Seed of the construction pool, ``None`` for nets loaded from disk.
    pool_size : int
    """

    dim: int
    delta: float
    points: np.ndarray = field(repr=False)
    seed: int | None = None
    pool_size: int = 0

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).reshape(-1, self.dim)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]

    def half(self):
        """One representative per antipodal pair."""
        return self.points[::2]


def default_pool_size(d, delta):
    est = (1.0 + 2.0 / delta) ** (d - 1)
    return int(min(max(_MIN_POOL, 200 * est), _MAX_POOL))


def pool_mesh_radius(d, pool_size):
    """Rough covering radius of ``pool_size`` random points taken up to sign.

    Solves ``N * V_{d-1} h^{d-1} = S_{d-1} log N`` with ``N = 2 * pool_size``,
    the cap-counting estimate for the largest hole left by random points.
    """
    n = 2.0 * pool_size
    log_area = math.log(2.0) + 0.5 * d * math.log(math.pi) - math.lgamma(0.5 * d)
    log_ball = 0.5 * (d - 1) * math.log(math.pi) - math.lgamma(0.5 * (d + 1))
    return math.exp((log_area + math.log(math.log(n)) - math.log(n) - log_ball) / (d - 1))


def _validate(d, delta):
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise ParameterError(f"dimension must be a positive integer, got {d!r}")
    if not (0.0 < delta <= 2.0) or not math.isfinite(delta):
        raise ParameterError(f"delta must lie in (0, 2], got {delta!r}")


def uniform_sphere(n, d, rng):
    x = rng.standard_normal((n, d))
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    # a zero Gaussian draw has probability zero but would poison the pool
    norms[norms == 0.0] = 1.0
    return x / norms


def construction_pool(net):
    """Rebuild the random pool a net was grown from."""
    if net.seed is None:
        raise ParameterError("net has no recorded construction seed")
    rng = np.random.default_rng(net.seed)
    return uniform_sphere(net.pool_size, net.dim, rng)


def build_delta_net(d, delta, seed=0, pool_size=None):
    """Build a delta-net of the unit sphere in ``R^d``.

    Greedy selection stops once every pool vector lies within
    ``delta - h`` of the selection, ``h`` being :func:`pool_mesh_radius`.

    Parameters
    ----------
    d : int
        Ambient dimension.
    delta : float
        Covering radius, in (0, 2].
    seed : int
        Seed for the construction pool. Identical arguments give identical nets.
    pool_size : int, optional
        Number of random unit vectors to cover. Defaults to
        ``max(1e4, 200 * (1 + 2/delta)**(d-1))`` capped at ``2e5``. Nets built
        from the same pool shrink monotonically as ``delta`` grows.

    Returns
    -------
    DeltaNet
    """
    _validate(d, delta)
    if d == 1:
        return DeltaNet(1, float(delta), np.array([[1.0], [-1.0]]), seed, 0)
    if pool_size is None:
        pool_size = default_pool_size(d, delta)
    if pool_size < 1:
        raise ParameterError("pool_size must be positive")
    rng = np.random.default_rng(seed)
    pool = uniform_sphere(pool_size, d, rng)
    # cover the pool to a tighter radius so holes between pool points stay covered
    target = delta - min(pool_mesh_radius(d, pool_size), 0.5 * delta)

    # distance up to sign: min(|x - s|, |x + s|) = sqrt(2 - 2 |<x, s>|)
    best_dot = np.zeros(pool_size)
    chosen = []
    idx = 0
    while True:
        s = pool[idx]
        chosen.append(s)
        np.maximum(best_dot, np.abs(pool @ s), out=best_dot)
        idx = int(np.argmin(best_dot))
        if math.sqrt(max(2.0 - 2.0 * best_dot[idx], 0.0)) <= target:
            break
    half = np.array(chosen)
    points = np.empty((2 * len(half), d))
    points[0::2] = half
    points[1::2] = -half
    return DeltaNet(d, float(delta), points, seed, pool_size)


def min_distances(net, x, chunk=8192):
    """Distance from each row of ``x`` (unit vectors) to the nearest net point."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    out = np.empty(x.shape[0])
    pts = net.points
    for start in range(0, x.shape[0], chunk):
        block = x[start:start + chunk]
        dots = np.max(block @ pts.T, axis=1)
        out[start:start + chunk] = np.sqrt(np.maximum(2.0 - 2.0 * dots, 0.0))
    return out


def check_covering(net, probes, seed=0):
    """Probe the covering property with uniform random unit vectors.

    Returns
    -------
    max_min_dist : float
        Largest distance from a probe to its nearest net point.
    ok : bool
        ``max_min_dist <= net.delta``.
    """
    if probes < 1:
        raise ParameterError("probes must be >= 1")
    rng = np.random.default_rng(seed)
    if net.dim == 1:
        x = rng.choice([-1.0, 1.0], size=(probes, 1))
    else:
        x = uniform_sphere(probes, net.dim, rng)
    worst = float(np.max(min_distances(net, x)))
    return worst, worst <= net.delta
