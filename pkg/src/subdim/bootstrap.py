"""Bootstrap p-values, significance schedules and sequential estimation of q.

Replicate ``i`` always draws from the stream ``SeedSequence(seed,
spawn_key=(i, attempt))``, so a p-value depends only on ``(seed, M)`` and not
on how replicates are scheduled across workers.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .exceptions import ReplicateFailure, SubdimError, UsageError

logger = logging.getLogger(__name__)

STRATEGIES = ("bottom-up", "top-down", "divide-conquer")


def new_seed() -> int:
    """A fresh 64-bit seed from OS entropy, to be recorded with the results."""
    return int(np.random.SeedSequence().generate_state(1, np.uint64)[0])


def stream(seed, *key) -> np.random.Generator:
    """Generator for the indexed sub-stream ``key`` of ``seed``.

    ``seed`` may be an int or a :class:`numpy.random.SeedSequence`, whose own
    spawn key is extended by ``key``.
    """
    if isinstance(seed, np.random.SeedSequence):
        ss = np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + key)
    else:
        ss = np.random.SeedSequence(int(seed), spawn_key=key)
    return np.random.default_rng(ss)


def derive_seed(seed, *key) -> int:
    """An int seed for a child computation, fixed by ``seed`` and ``key``."""
    return int(stream(seed, *key).integers(0, 2**63 - 1))


@dataclass
class BootstrapConfig:
    M: int = 500
    seed: int | None = None
    n_jobs: int = 1
    strict_sequential: bool = False

    def __post_init__(self):
        if int(self.M) < 1:
            raise UsageError("the number of bootstrap replicates M must be >= 1")
        self.M = int(self.M)


@dataclass
class BootstrapOutcome:
    p_value: float
    scores: np.ndarray
    variance: float
    M: int
    seed: int
    retries: int = 0


def _run_replicate(score, seed, index):
    try:
        return float(score(stream(seed, index, 0))), 0
    except (SubdimError, np.linalg.LinAlgError, FloatingPointError) as exc:
        logger.debug("replicate %d failed (%s); retrying on a fresh stream", index, exc)
    try:
        return float(score(stream(seed, index, 1))), 1
    except (SubdimError, np.linalg.LinAlgError, FloatingPointError) as exc:
        raise ReplicateFailure(f"bootstrap replicate {index} failed twice: {exc}") from exc


def _run_block(score, seed, indices):
    return [_run_replicate(score, seed, i) for i in indices]


def bootstrap_pvalue(T_obs: float, score: Callable[[np.random.Generator], float],
                     config: BootstrapConfig) -> BootstrapOutcome:
    """Monte Carlo p-value ``(#{T*_i >= T} + 1) / (M + 1)``.

    ``score`` generates one bootstrap sample from the null distribution with
    the generator it is given and returns the statistic on it. A replicate
    that raises a numerical error is retried once on a fresh stream; a
    second failure aborts with :class:`ReplicateFailure`.

    The returned variance ``p(1 - p)/M`` estimates the Monte Carlo variance
    of the p-value around its exact bootstrap value.
    """
    seed = new_seed() if config.seed is None else int(config.seed)
    M = config.M
    if config.n_jobs == 1 or config.strict_sequential:
        out = _run_block(score, seed, range(M))
    else:
        from joblib import Parallel, delayed

        blocks = [b for b in np.array_split(np.arange(M), max(1, 4 * abs(config.n_jobs))) if len(b)]
        parts = Parallel(n_jobs=config.n_jobs)(delayed(_run_block)(score, seed, b.tolist()) for b in blocks)
        out = [r for part in parts for r in part]
    scores = np.array([s for s, _ in out])
    retries = sum(a for _, a in out)
    exceed = int(np.count_nonzero(scores >= T_obs))
    p_hat = (exceed + 1) / (M + 1)
    return BootstrapOutcome(p_hat, scores, p_hat * (1 - p_hat) / M, M, seed, retries)


def alpha_schedule(n: int, n0: int, alpha0: float, k: int | None = None) -> float:
    """Test size ``(n0 / n) * alpha0`` shrinking with the sample size.

    The same base size is used for every ``k``. Below ``n0`` the schedule is
    inactive and ``alpha0`` is returned.
    """
    if n0 <= 0:
        raise UsageError("n0 must be positive")
    if not 0.0 < alpha0 < 1.0:
        raise UsageError("alpha0 must lie in (0, 1)")
    if n < n0:
        return float(alpha0)
    return float(min(max(n0 / n * alpha0, np.finfo(float).tiny), 1.0 - 1e-12))


@dataclass
class Decision:
    k: int
    statistic: float
    p_value: float
    level: float
    accept: bool


@dataclass
class DimensionEstimate:
    """Estimated dimension plus the ordered trace of the tests behind it."""

    q_hat: int
    strategy: str
    decisions: list
    alpha_schedule: str
    saturated: bool = False
    warnings: list = field(default_factory=list)
    tests: dict = field(default_factory=dict, repr=False)

    def to_dict(self) -> dict:
        from .results import _jsonable

        d = {
            "q_hat": self.q_hat,
            "strategy": self.strategy,
            "decisions": [asdict(x) for x in self.decisions],
            "alpha_schedule": self.alpha_schedule,
            "saturated": self.saturated,
            "warnings": list(self.warnings),
            "tests": {str(k): t.to_dict() for k, t in self.tests.items() if hasattr(t, "to_dict")},
        }
        return _jsonable(d)


def estimate_dimension(test: Callable[[int], object], p_max: int, strategy: str = "bottom-up",
                       alpha: float = 0.05, schedule: tuple | None = None,
                       n: int | None = None) -> DimensionEstimate:
    """Sequential test-based estimate of the signal dimension.

    Parameters
    ----------
    test : callable
        ``test(k)`` returns an object with ``statistic`` and ``p_value`` for
        ``H0k``; it is called at most once per ``k`` in ``0..p_max-1``.
    p_max : int
        Largest admissible dimension. It is returned, flagged as saturated,
        when every tested hypothesis is rejected.
    strategy : {"bottom-up", "top-down", "divide-conquer"}
        Bottom-up takes the first accepted ``k``; top-down walks down from
        ``p_max - 1`` and stops after the first rejection. Divide-and-conquer
        bisects on the acceptance indicator, then tests ``k = 0`` as a
        monotonicity check and falls back to bottom-up on a contradiction.
    alpha, schedule, n
        Fixed level ``alpha``, or ``schedule = (n0, alpha0)`` with sample
        size ``n`` for the shrinking level of :func:`alpha_schedule`.
    """
    if strategy not in STRATEGIES:
        raise UsageError(f"unknown strategy {strategy!r}; choose from {STRATEGIES}")
    if p_max < 0:
        raise UsageError("p_max must be non-negative")
    if schedule is not None:
        if n is None:
            raise UsageError("a significance schedule needs the sample size n")
        n0, alpha0 = schedule
        level_of = lambda k: alpha_schedule(n, n0, alpha0, k)  # noqa: E731
        desc = f"schedule(n0={n0}, alpha0={alpha0}, n={n})"
    else:
        if not 0.0 < alpha < 1.0:
            raise UsageError("alpha must lie in (0, 1)")
        level_of = lambda k: alpha  # noqa: E731
        desc = f"fixed({alpha})"

    decisions: dict[int, Decision] = {}
    tests = {}

    def accepts(k):
        if k not in decisions:
            res = test(k)
            tests[k] = res
            lvl = level_of(k)
            decisions[k] = Decision(k, float(res.statistic), float(res.p_value), lvl,
                                    bool(res.p_value >= lvl))
        return decisions[k].accept

    notes = []
    order: list[int] = []

    def bottom_up():
        for k in range(p_max):
            order.append(k)
            if accepts(k):
                return k
        return p_max

    if strategy == "bottom-up":
        q = bottom_up()
    elif strategy == "top-down":
        q = 0
        for k in range(p_max - 1, -1, -1):
            order.append(k)
            if not accepts(k):
                q = k + 1
                break
    else:
        lo, hi = 0, p_max
        while lo < hi:
            mid = (lo + hi) // 2
            order.append(mid)
            if accepts(mid):
                hi = mid
            else:
                lo = mid + 1
        q = lo
        if q > 0:
            if 0 not in order:
                order.append(0)
            if accepts(0):
                msg = "acceptance is not monotone in k; fell back to bottom-up"
                warnings.warn(msg, RuntimeWarning)
                notes.append(msg)
                q = bottom_up()

    seen = []
    for k in order:
        if k not in seen:
            seen.append(k)
    saturated = p_max > 0 and q == p_max
    return DimensionEstimate(q, strategy, [decisions[k] for k in seen], desc, saturated, notes,
                             {k: tests[k] for k in seen})

