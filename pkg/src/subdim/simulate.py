"""Simulation models and rejection-rate estimation.

Every repetition draws its data from the indexed stream ``(seed, 0, rep)``
and every bootstrap inside it gets the seed ``derive_seed(seed, 1, rep, j)``
for the j-th method, so a report depends only on the spec.
"""

from __future__ import annotations

import csv
import io
import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .bootstrap import derive_seed, new_seed, stream
from .exceptions import SubdimError, UsageError

logger = logging.getLogger(__name__)

MODELS = ("pca_m1", "pca_m2", "pca_m3", "ica_m1", "ica_m2", "sir_m1", "sir_m2")
METHODS = {
    "pca": ("asymp", "boot1", "boot2"),
    "ica": ("asy1", "asy2", "boot1", "boot2"),
    "sir": ("asymp", "boot"),
}
SIGNAL_DIM = {"pca": 3, "ica": 3, "sir": 2}


def family_of(model: str) -> str:
    model = normalize_model(model)
    return model.split("_")[0]


def normalize_model(model: str) -> str:
    m = model.lower().replace("-", "_")
    if m not in MODELS:
        raise UsageError(f"unknown model {model!r}; choose from {MODELS}")
    return m


@dataclass
class SimulationSpec:
    """One cell of a rejection-rate study.

    ``k`` lists the hypotheses ``H0k`` to test (default: the true dimension).
    ``scatter`` applies to PCA models and ``H`` to SIR models. With ``mix``
    the data are transformed by a random affine map fixed by the seed.
    """

    model: str
    p: int
    n: int
    reps: int = 500
    M: int = 200
    methods: tuple = ("asymp",)
    alpha: float = 0.05
    seed: int | None = None
    k: tuple | None = None
    scatter: str = "cov"
    H: int = 10
    tyler_steps: int = 3
    mix: bool = False
    n_jobs: int = 1
    strict_sequential: bool = False

    def __post_init__(self):
        self.model = normalize_model(self.model)
        fam = family_of(self.model)
        q = SIGNAL_DIM[fam]
        if self.p < q + 1:
            raise UsageError(f"model {self.model} needs p >= {q + 1}")
        if self.n < self.p + 2:
            raise UsageError("n must be at least p + 2")
        if self.reps < 1:
            raise UsageError("reps must be positive")
        self.methods = tuple(m.lower() for m in self.methods)
        for m in self.methods:
            if m not in METHODS[fam] and not (fam == "ica" and m == "asymp"):
                raise UsageError(f"method {m!r} is not available for {self.model}; "
                                 f"choose from {METHODS[fam]}")
        self.k = (q,) if self.k is None else tuple(int(v) for v in self.k)
        if self.seed is None:
            self.seed = new_seed()

    @property
    def q(self) -> int:
        return SIGNAL_DIM[family_of(self.model)]


# standardised marginals: mean 0, variance 1


def std_exponential(rng, n):
    return rng.exponential(1.0, n) - 1.0


def std_chisq1(rng, n):
    return (rng.chisquare(1, n) - 1.0) / np.sqrt(2.0)


def std_chisq2(rng, n):
    return (rng.chisquare(2, n) - 2.0) / 2.0


def std_t5(rng, n):
    return rng.standard_t(5, n) * np.sqrt(3.0 / 5.0)


def std_uniform(rng, n):
    return (rng.random(n) - 0.5) * np.sqrt(12.0)


MARGINALS = {
    "exponential": std_exponential,
    "chisq1": std_chisq1,
    "chisq2": std_chisq2,
    "t5": std_t5,
    "uniform": std_uniform,
    "normal": lambda rng, n: rng.standard_normal(n),
}


def _loadings(p):
    A = np.zeros((p, 3))
    A[0, 0] = np.sqrt(2.0)
    A[1, 1] = A[2, 2] = 1.0
    return A


def _independent(rng, n, names):
    return np.column_stack([MARGINALS[name](rng, n) for name in names])


def _mixing(spec):
    rng = stream(spec.seed, 2)
    A = rng.standard_normal((spec.p, spec.p)) + spec.p * np.eye(spec.p)
    return A, rng.standard_normal(spec.p)


def simulate_model(spec: SimulationSpec, rep_index: int):
    """Data ``(X, y)`` of repetition ``rep_index``; ``y`` is None except for SIR.

    PCA models have covariance ``diag(3, 2, 2, 1, ..., 1)``: Gaussian factors
    (``pca_m1``), standardised exponential, chi-square(1) and t5 factors
    (``pca_m2``), or an elliptical t5 law (``pca_m3``). ICA models have three
    non-Gaussian standardised sources followed by Gaussian ones. SIR models
    draw ``z ~ N(0, I_p)`` and ``y`` from two of its coordinates plus
    ``N(0, 0.25)`` noise.
    """
    rng = stream(spec.seed, 0, int(rep_index))
    n, p = spec.n, spec.p
    y = None
    m = spec.model
    if m == "pca_m1":
        X = rng.standard_normal((n, 3)) @ _loadings(p).T + rng.standard_normal((n, p))
    elif m == "pca_m2":
        Z = _independent(rng, n, ["exponential", "chisq1", "t5"])
        X = Z @ _loadings(p).T + rng.standard_normal((n, p))
    elif m == "pca_m3":
        scale = np.sqrt(0.6 * np.r_[3.0, 2.0, 2.0, np.ones(p - 3)])
        G = rng.standard_normal((n, p)) * scale
        X = G / np.sqrt(rng.chisquare(5, n) / 5.0)[:, None]
    elif m in ("ica_m1", "ica_m2"):
        third = "uniform" if m == "ica_m1" else "t5"
        X = _independent(rng, n, ["exponential", "chisq2", third] + ["normal"] * (p - 3))
    else:
        Z = rng.standard_normal((n, p))
        z1, z2 = Z[:, 0], Z[:, 1]
        eps = 0.5 * rng.standard_normal(n)
        if m == "sir_m1":
            y = z1 * (z1 + z2 + 1.0) + eps
        else:
            y = z1 / (0.5 + (z2 + 1.5) ** 2) + eps
        X = Z
    if spec.mix:
        A, b = _mixing(spec)
        X = X @ A.T + b
    return X, y


def run_method(spec: SimulationSpec, X, y, k: int, method: str, seed: int):
    """p-value of one method on one data set."""
    from .fobi import fobi_asymp_pvalue, fobi_boot_pvalue
    from .pca import pca_asymp_pvalue, pca_boot_pvalue
    from .sir import sir_asymp_pvalue, sir_boot_pvalue

    fam = family_of(spec.model)
    par = {"n_jobs": 1, "strict_sequential": spec.strict_sequential}
    if fam == "pca":
        if method == "asymp":
            return pca_asymp_pvalue(X, k, spec.scatter).p_value
        return pca_boot_pvalue(X, k, spec.scatter, int(method[-1]), spec.M, seed,
                               tyler_steps=spec.tyler_steps, **par).p_value
    if fam == "ica":
        if method in ("asymp", "asy1"):
            return fobi_asymp_pvalue(X, k, "ica").p_value
        if method == "asy2":
            return fobi_asymp_pvalue(X, k, "ngca").p_value
        return fobi_boot_pvalue(X, k, int(method[-1]), spec.M, seed, **par).p_value
    if method == "asymp":
        return sir_asymp_pvalue(X, y, k, spec.H).p_value
    return sir_boot_pvalue(X, y, k, spec.H, spec.M, seed, **par).p_value


def _one_rep(spec, rep):
    X, y = simulate_model(spec, rep)
    out = {}
    for j, method in enumerate(spec.methods):
        for k in spec.k:
            try:
                out[(method, k)] = run_method(spec, X, y, k, method, derive_seed(spec.seed, 1, rep, j, k))
            except SubdimError as exc:
                logger.warning("rep %d, %s, k=%d failed: %s", rep, method, k, exc)
                out[(method, k)] = None
    return out


@dataclass
class RejectionReport:
    """Rejection rates ``mean(p <= alpha)`` per method and hypothesis.

    ``se_bound = 1 / (2 sqrt(N))`` bounds the Monte Carlo standard error of
    every rate, whatever its true value.
    """

    spec: SimulationSpec
    rows: list = field(default_factory=list)
    pvalues: dict = field(default_factory=dict, repr=False)
    seconds: float = 0.0

    COLUMNS = ("model", "method", "scatter", "k", "n", "p", "reps", "completed", "failures",
               "alpha", "rate", "se_bound", "seed")

    def rate(self, method: str, k: int | None = None) -> float:
        k = self.spec.k[0] if k is None else k
        for r in self.rows:
            if r["method"] == method and r["k"] == k:
                return r["rate"]
        raise KeyError((method, k))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=self.COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({c: (f"{r[c]:.6f}" if isinstance(r[c], float) else r[c]) for c in self.COLUMNS})
        return buf.getvalue()

    def to_dict(self) -> dict:
        spec = asdict(self.spec)
        return {"spec": spec, "rows": [dict(r) for r in self.rows]}


def rejection_rate(spec: SimulationSpec, progress=None) -> RejectionReport:
    """Run ``spec.reps`` repetitions and tabulate rejection rates.

    Failed tests are logged and left out of the rate; the number of
    completed repetitions is reported per row.
    """
    t0 = time.perf_counter()
    reps = range(spec.reps)
    if spec.n_jobs != 1 and not spec.strict_sequential:
        from joblib import Parallel, delayed

        results = Parallel(n_jobs=spec.n_jobs)(delayed(_one_rep)(spec, r) for r in reps)
    else:
        results = []
        for r in reps:
            results.append(_one_rep(spec, r))
            if progress is not None:
                progress(r + 1, spec.reps)
    report = RejectionReport(spec)
    for method in spec.methods:
        for k in spec.k:
            pv = np.array([res[(method, k)] for res in results if res[(method, k)] is not None])
            report.pvalues[(method, k)] = pv
            done = int(pv.size)
            rate = float(np.mean(pv <= spec.alpha)) if done else float("nan")
            report.rows.append({
                "model": spec.model, "method": method,
                "scatter": spec.scatter if family_of(spec.model) == "pca" else "",
                "k": k, "n": spec.n, "p": spec.p, "reps": spec.reps, "completed": done,
                "failures": spec.reps - done, "alpha": spec.alpha, "rate": rate,
                "se_bound": 0.5 / np.sqrt(spec.reps), "seed": spec.seed,
            })
    report.seconds = time.perf_counter() - t0
    return report
