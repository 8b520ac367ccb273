"""Experiment configuration, read from and written to JSON with the same field names."""

from dataclasses import asdict, dataclass, field, fields
import math

from ..errors import ParameterError

GENERATORS = ("gaussian", "student_t", "contaminated")
MODES = ("centered", "paired")
LAMBDA_MODES = ("practical", "oracle", "grid")


def _check_spectrum(spec):
    if not isinstance(spec, (list, tuple)) or not spec:
        raise ParameterError("generator spectrum must be a non-empty list")
    vals = [float(v) for v in spec]
    if any(v < 0.0 or not math.isfinite(v) for v in vals):
        raise ParameterError("generator spectrum must be finite and non-negative")
    return vals


def validate_generator(gen, d):
    """Normalise a generator description.

    ``{"kind": "gaussian", "spectrum": [...]}``,
    ``{"kind": "student_t", "dof": v, "spectrum": [...]}`` or
    ``{"kind": "contaminated", "base": {...}, "rate": r, "outlier_norm": c}``.
    """
    if not isinstance(gen, dict) or "kind" not in gen:
        raise ParameterError("generator must be an object with a 'kind'")
    kind = gen["kind"]
    if kind not in GENERATORS:
        raise ParameterError(f"unknown generator kind {kind!r}")
    if kind == "contaminated":
        extra = set(gen) - {"kind", "base", "rate", "outlier_norm"}
        if extra:
            raise ParameterError(f"unknown generator fields {sorted(extra)}")
        base = validate_generator(gen.get("base"), d)
        if base["kind"] == "contaminated":
            raise ParameterError("contamination cannot be nested")
        rate = float(gen.get("rate", 0.0))
        if not 0.0 <= rate < 1.0:
            raise ParameterError("rate must lie in [0, 1)")
        norm = float(gen.get("outlier_norm", 0.0))
        if norm < 0.0 or not math.isfinite(norm):
            raise ParameterError("outlier_norm must be finite and non-negative")
        return {"kind": kind, "base": base, "rate": rate, "outlier_norm": norm}
    allowed = {"kind", "spectrum"} | ({"dof"} if kind == "student_t" else set())
    extra = set(gen) - allowed
    if extra:
        raise ParameterError(f"unknown generator fields {sorted(extra)}")
    spec = _check_spectrum(gen.get("spectrum"))
    if len(spec) != d:
        raise ParameterError(f"spectrum has {len(spec)} entries, d={d}")
    out = {"kind": kind, "spectrum": spec}
    if kind == "student_t":
        dof = float(gen.get("dof", 0.0))
        if not dof > 2.0:
            raise ParameterError("student_t needs dof > 2 for a finite covariance")
        out["dof"] = dof
    return out


@dataclass
class ExperimentConfig:
    """One Monte Carlo experiment.

    The first block of fields is the documented core. The rest are optional
    knobs: ``kappa`` (a number, ``"true"`` for the generator's known value, or
    ``None`` to estimate it), ``plugins`` (``"known"`` takes trace and
    Hilbert-Schmidt norm from the true covariance, ``"estimated"`` from the
    estimate), the ``vacuous`` policy passed to the estimator, ``self_test``
    (replace the estimate by the truth), and ``r`` / ``cutoff`` for PCA runs.
    """

    generator: dict
    n: int
    d: int
    delta: float = 0.2
    eps: float = 0.1
    trials: int = 1
    seed: int = 0
    mode: str = "paired"
    lambda_mode: str = "grid"
    output_path: str | None = None
    kappa: float | str | None = "true"
    plugins: str = "known"
    vacuous: str = "cap"
    self_test: bool = False
    experiment: str = "bounds"
    r: int = 1
    cutoff: list | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.n = int(self.n)
        self.d = int(self.d)
        self.trials = int(self.trials)
        self.seed = int(self.seed)
        self.delta = float(self.delta)
        self.eps = float(self.eps)
        if self.d < 1:
            raise ParameterError("d must be >= 1")
        if self.n < 4:
            raise ParameterError("n must be >= 4")
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        if not 0.0 < self.delta <= 2.0:
            raise ParameterError("delta must lie in (0, 2]")
        if not 0.0 < self.eps < 0.5:
            raise ParameterError("eps must lie in (0, 1/2)")
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}")
        if self.lambda_mode not in LAMBDA_MODES:
            raise ParameterError(f"lambda_mode must be one of {LAMBDA_MODES}")
        if self.plugins not in ("known", "estimated"):
            raise ParameterError("plugins must be 'known' or 'estimated'")
        if self.vacuous not in ("cap", "free"):
            raise ParameterError("vacuous must be 'cap' or 'free'")
        if self.experiment not in ("bounds", "pca"):
            raise ParameterError("experiment must be 'bounds' or 'pca'")
        if isinstance(self.kappa, str) and self.kappa != "true":
            raise ParameterError("kappa must be a number, 'true' or null")
        if isinstance(self.kappa, (int, float)) and not isinstance(self.kappa, bool):
            self.kappa = float(self.kappa)
        self.generator = validate_generator(self.generator, self.d)

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ParameterError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ParameterError(f"unknown config fields {sorted(extra)}")
        missing = {"generator", "n", "d"} - set(data)
        if missing:
            raise ParameterError(f"missing config fields {sorted(missing)}")
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ParameterError):
                raise
            raise ParameterError(str(exc)) from exc

    def to_dict(self):
        return asdict(self)
