"""Synthetic samples with a known covariance.

Each trial draws from its own stream ``default_rng([seed, trial])``, so the
data of a trial does not depend on which worker runs it or in what order.
"""

import math

import numpy as np

from ..net import uniform_sphere
from ..projector_lab import random_orthogonal


def trial_rng(seed, trial):
    return np.random.default_rng([int(seed), int(trial)])


def _base_rows(gen, n, rng):
    lam = np.asarray(gen["spectrum"], dtype=float)
    d = lam.shape[0]
    v = random_orthogonal(d, rng)
    if gen["kind"] == "gaussian":
        z = rng.standard_normal((n, d))
    else:
        dof = gen["dof"]
        z = rng.standard_t(dof, size=(n, d)) * math.sqrt((dof - 2.0) / dof)
    x = (z * np.sqrt(lam)) @ v.T
    return x, (v * lam) @ v.T


def generate_with_truth(config, trial):
    """Sample of ``config.n`` rows and the covariance it was drawn from.

    Contamination replaces ``round(rate * n)`` rows by ``outlier_norm`` times
    a uniform unit vector; the returned covariance is the clean one.
    """
    gen = config.generator
    rng = trial_rng(config.seed, trial)
    if gen["kind"] != "contaminated":
        return _base_rows(gen, config.n, rng)
    x, sigma = _base_rows(gen["base"], config.n, rng)
    k = int(round(gen["rate"] * config.n))
    if k:
        idx = rng.choice(config.n, size=k, replace=False)
        x[idx] = gen["outlier_norm"] * uniform_sphere(k, config.d, rng)
    return x, sigma


def generate(config, trial):
    return generate_with_truth(config, trial)[0]


def _clean(gen):
    return gen["base"] if gen["kind"] == "contaminated" else gen


def marginal_kurtosis(gen):
    """Fourth moment of a unit-variance coordinate; ``inf`` for dof <= 4."""
    g = _clean(gen)
    if g["kind"] == "gaussian":
        return 3.0
    dof = g["dof"]
    return 3.0 + 6.0 / (dof - 4.0) if dof > 4.0 else math.inf


def known_kappa(gen):
    """Directional kurtosis of the clean distribution.

    Coordinates are independent in the rotated frame, so mixing them only
    lowers the excess kurtosis and the marginal value is the supremum.
    """
    return marginal_kurtosis(gen)


def fourth_moment_root(gen):
    """``E[||X||^4]^(1/2)`` of the clean distribution."""
    lam = np.asarray(_clean(gen)["spectrum"], dtype=float)
    k = marginal_kurtosis(gen)
    if math.isinf(k):
        return math.inf
    return math.sqrt(float(lam.sum()) ** 2 + (k - 1.0) * float(np.sum(lam ** 2)))
