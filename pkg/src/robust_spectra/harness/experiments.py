"""Monte Carlo experiments: bound coverage and robust-versus-empirical PCA."""

from dataclasses import dataclass, field
import math
import time

import numpy as np

from .. import _backend
from .._parallel import thread_map
from ..errors import ParameterError
from ..estimator import empirical_covariance, robust_covariance
from ..net import build_delta_net
from ..spectral import (BoundParams, CutoffSpec, apply_spectral_function, bound_b,
                        cutoff_frobenius_bound, cutoff_operator_bound,
                        eigenvalue_deviation_check, eigh, frobenius_distance,
                        operator_distance, projector_bound, projector_top_r,
                        shrunk_estimator, step_compatible_cutoff)
from .config import ExperimentConfig
from .generators import fourth_moment_root, generate_with_truth, known_kappa

SCHEMA = 1
RUNTIME_KEYS = ("runtime_s",)


@dataclass
class TrialReport:
    """JSON-ready experiment outcome with keys ``schema, config, per_trial, summary``."""

    config: dict
    per_trial: list
    summary: dict
    schema: int = SCHEMA
    meta: dict = field(default_factory=dict)

    def to_json(self, runtimes=True):
        trials = self.per_trial
        if not runtimes:
            trials = [{k: v for k, v in t.items() if k not in RUNTIME_KEYS} for t in trials]
        return {"schema": self.schema, "config": self.config, "per_trial": trials,
                "summary": self.summary}


def _as_config(config):
    return config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)


def _kappa_value(config):
    if config.kappa == "true":
        k = known_kappa(config.generator)
        return None if math.isinf(k) else k
    return config.kappa


def _n_effective(config):
    return config.n // 2 if config.mode == "paired" else config.n


def _hs(m):
    return float(np.sqrt(np.sum(m * m)))


def _estimate(config, x, sigma, net):
    """Robust estimate plus the bound parameters used to judge it."""
    kappa = _kappa_value(config)
    known = config.plugins == "known"
    trace = float(np.trace(sigma)) if known else None
    hs = _hs(sigma) if known else None
    fm = fourth_moment_root(config.generator) if config.lambda_mode == "oracle" else None
    if config.self_test:
        est, diag = sigma.copy(), None
        kappa_used = kappa if kappa is not None else 3.0
    else:
        est, diag = robust_covariance(
            x, config.delta, config.eps, config.seed, mode=config.mode, kappa=kappa,
            trace=trace, hs_norm=hs, lambda_mode=config.lambda_mode, true_cov=sigma,
            fourth_moment_root=fm, vacuous=config.vacuous, threads=1, net=net)
        kappa_used = diag.kappa
    if not known:
        trace, hs = float(np.trace(est)), _hs(est)
    params = BoundParams.create(_n_effective(config), config.eps, kappa_used, trace, hs,
                                config.delta)
    return est, diag, params


def _diag_fields(diag):
    if diag is None:
        return {"self_test": True}
    return {"kappa": diag.kappa, "net_size": diag.net_size, "converged": diag.converged,
            "vacuous_directions": diag.vacuous_count, "crossed_directions": diag.crossed_count}


def run_bound_experiment(config, threads=None):
    """Coverage of the eigenvalue deviation bound over independent trials.

    A trial violates when any index fails; it is vacuous when every index has
    an infinite bound. The violation frequency is over non-vacuous trials and
    is 0 when there are none.
    """
    config = _as_config(config)
    net = None if config.self_test else build_delta_net(config.d, config.delta, config.seed)

    def trial(t):
        start = time.perf_counter()
        x, sigma = generate_with_truth(config, t)
        est, diag, params = _estimate(config, x, sigma, net)
        true_spec, est_spec = eigh(sigma), eigh(est)
        rep = eigenvalue_deviation_check(true_spec, est_spec, params)
        rec = {
            "trial": t,
            "true_eigenvalues": true_spec.eigenvalues,
            "est_eigenvalues": est_spec.eigenvalues,
            "deviations": [r["deviation"] for r in rep.rows],
            "bounds": [r["bound"] for r in rep.rows],
            "pass": [r["pass"] for r in rep.rows],
            "all_pass": rep.passed,
            "vacuous": rep.vacuous,
            "sigma": params.sigma,
        }
        rec.update(_diag_fields(diag))
        rec["runtime_s"] = time.perf_counter() - start
        return rec

    per_trial = thread_map(trial, range(config.trials), threads)
    finite = [r for r in per_trial if not r["vacuous"]]
    violations = sum(not r["all_pass"] for r in finite)
    summary = {
        "trials": config.trials,
        "finite_trials": len(finite),
        "vacuous_trials": config.trials - len(finite),
        "vacuity_fraction": (config.trials - len(finite)) / config.trials,
        "violations": violations,
        "violation_frequency": violations / len(finite) if finite else 0.0,
        "claimed_max_frequency": 2.0 * config.eps,
        "backend": _backend.NAME,
    }
    summary["within_claim"] = summary["violation_frequency"] <= summary["claimed_max_frequency"]
    return TrialReport(config.to_dict(), per_trial, summary)


def _cutoff_for(config, true_spec, r):
    if config.cutoff is not None:
        return CutoffSpec.from_knots(config.cutoff)
    lam = true_spec.eigenvalues
    return step_compatible_cutoff(lam[r - 1], lam[r])


def run_pca_comparison(config, r=None, cutoff=None, threads=None):
    """Projector and cut-off errors of the robust and empirical estimates.

    Parameters
    ----------
    r : int, optional
        Projector rank, ``config.r`` by default.
    cutoff : CutoffSpec, optional
        Spectral function. Defaults to ``config.cutoff`` or, failing that,
        the ramp across the true gap after index ``r``.
    """
    config = _as_config(config)
    r = config.r if r is None else int(r)
    if not 1 <= r < config.d:
        raise ParameterError(f"r must satisfy 1 <= r < d, got {r}")
    net = None if config.self_test else build_delta_net(config.d, config.delta, config.seed)

    def trial(t):
        start = time.perf_counter()
        x, sigma = generate_with_truth(config, t)
        est, diag, params = _estimate(config, x, sigma, net)
        emp = empirical_covariance(x, center=True)
        true_spec, est_spec, emp_spec = eigh(sigma), eigh(est), eigh(emp)
        f = cutoff if cutoff is not None else _cutoff_for(config, true_spec, r)
        lam = true_spec.eigenvalues
        pi_true = projector_top_r(true_spec, r)
        b1 = bound_b(max(lam[0], 0.0), params)
        gap = lam[r - 1] - lam[r]
        f_true = apply_spectral_function(true_spec, f)
        tilde = shrunk_estimator(est_spec, params)
        top = lam[0] if lam[0] > 0 else math.nan
        rec = {
            "trial": t,
            "proj_err_robust": operator_distance(pi_true, projector_top_r(est_spec, r)),
            "proj_err_empirical": operator_distance(pi_true, projector_top_r(emp_spec, r)),
            "top_eig_rel_err_robust": abs(est_spec.eigenvalues[0] - lam[0]) / top,
            "top_eig_rel_err_empirical": abs(emp_spec.eigenvalues[0] - lam[0]) / top,
            "cutoff_op_err": operator_distance(f_true, apply_spectral_function(est_spec, f)),
            "cutoff_frob_err": frobenius_distance(f_true, apply_spectral_function(tilde, f)),
            "b_lambda1": b1,
            "projector_bound": projector_bound(r, gap, b1) if gap > 0 else math.inf,
            "cutoff_op_bound": cutoff_operator_bound(true_spec, params, f.lipschitz_inv).bound,
            "cutoff_frob_bound": cutoff_frobenius_bound(true_spec, params, f.lipschitz_inv).bound,
        }
        rec["projector_ok"] = rec["proj_err_robust"] <= rec["projector_bound"]
        rec["cutoff_op_ok"] = rec["cutoff_op_err"] <= rec["cutoff_op_bound"]
        rec["cutoff_frob_ok"] = rec["cutoff_frob_err"] <= rec["cutoff_frob_bound"]
        rec.update(_diag_fields(diag))
        rec["runtime_s"] = time.perf_counter() - start
        return rec

    per_trial = thread_map(trial, range(config.trials), threads)

    def med(key):
        return float(np.median([p[key] for p in per_trial]))

    def frac(key, bound):
        rows = [p for p in per_trial if math.isfinite(p[bound])]
        return sum(p[key] for p in rows) / len(rows) if rows else None

    summary = {
        "trials": config.trials,
        "r": r,
        "median_proj_err_robust": med("proj_err_robust"),
        "median_proj_err_empirical": med("proj_err_empirical"),
        "median_top_eig_rel_err_robust": med("top_eig_rel_err_robust"),
        "median_top_eig_rel_err_empirical": med("top_eig_rel_err_empirical"),
        "median_cutoff_op_err": med("cutoff_op_err"),
        "median_cutoff_frob_err": med("cutoff_frob_err"),
        "projector_bound_hold_rate": frac("projector_ok", "projector_bound"),
        "cutoff_op_bound_hold_rate": frac("cutoff_op_ok", "cutoff_op_bound"),
        "cutoff_frob_bound_hold_rate": frac("cutoff_frob_ok", "cutoff_frob_bound"),
        "backend": _backend.NAME,
    }
    summary["robust_beats_empirical"] = (
        summary["median_top_eig_rel_err_robust"] < summary["median_top_eig_rel_err_empirical"]
        and summary["median_proj_err_robust"] < summary["median_proj_err_empirical"])
    return TrialReport(config.to_dict(), per_trial, summary)


def run_experiment(config, threads=None):
    config = _as_config(config)
    if config.experiment == "pca":
        return run_pca_comparison(config, threads=threads)
    return run_bound_experiment(config, threads=threads)
