"""Randomized approximation of the volume of a union of bodies.

The estimator repeatedly picks a body with probability proportional to its
reported volume, draws a uniform point from it and then tests random bodies
until one contains the point. The steps spent this way estimate how thinly
the point is covered; after a fixed total of ``T`` steps the number of
completed trials ``M`` gives ``U ~ T V' / (n M)``. With oracle errors inside
the feasibility condition the result is within a factor ``1 +- eps`` of the
true union volume with probability at least 3/4, which :func:`amplify`
boosts to ``1 - delta`` with a median of independent runs.
"""

from __future__ import annotations

import math
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .bodies import OracleErrors
from .exceptions import AmplificationError, ContractError, InfeasibleBudgetError, NoCompletedTrialError
from .validation import as_generator, check_bodies, check_ratio

__all__ = [
    "EstimatorParams",
    "DerivedConstants",
    "EstimateReport",
    "feasibility_threshold",
    "derived_constants",
    "BodyPicker",
    "body_picker",
    "approx_union",
    "amplification_runs",
    "amplify",
]

LN2 = math.log(2.0)
DEFAULT_BATCH = 8192


@dataclass(frozen=True)
class EstimatorParams:
    eps: float
    errors: OracleErrors = field(default_factory=OracleErrors)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "eps", check_ratio(self.eps, "eps", allow_zero=False))
        if not isinstance(self.errors, OracleErrors):
            raise ContractError("errors must be an OracleErrors instance")
        seed = self.seed
        if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool) or not 0 <= seed < 2**64:
            raise ContractError(f"seed must be an integer in [0, 2^64), got {seed!r}")
        object.__setattr__(self, "seed", int(seed))


@dataclass(frozen=True)
class DerivedConstants:
    """Effective accuracy, oracle-error inflation and step budget of one instance."""

    n: int
    eps: float
    errors: OracleErrors
    eps_tilde: float
    c_tilde: float
    t_budget: float

    def to_dict(self) -> dict:
        return {"eps_tilde": self.eps_tilde, "c_tilde": self.c_tilde, "t_budget": self.t_budget}


def _c_tilde(n: int, errors: OracleErrors) -> float:
    ep, ev, es = errors.eps_p, errors.eps_v, errors.eps_s
    return (1 + es) * (1 + ev) * (1 + n * ep) / ((1 - ev) * (1 - ep))


def feasibility_threshold(n: int, errors: OracleErrors) -> float:
    """The accuracy ``eps`` must strictly exceed this for the step budget to be valid.

    Equals ``eps_v + 2 (1 + eps_v) sqrt(2 (C - 1) n)`` with ``C`` the
    oracle-error inflation factor; zero for exact oracles.
    """
    c = _c_tilde(n, errors)
    return errors.eps_v + 2 * (1 + errors.eps_v) * math.sqrt(2 * max(c - 1, 0.0) * n)


def derived_constants(n: int, params: EstimatorParams) -> DerivedConstants:
    """Compute ``eps_tilde``, ``C_tilde`` and the step budget ``T`` for ``n`` bodies.

    Raises:
        InfeasibleBudgetError: when ``params.eps`` does not exceed
            :func:`feasibility_threshold`; ``min_eps`` carries the threshold.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ContractError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    eps, errors = params.eps, params.errors
    threshold = feasibility_threshold(n, errors)
    if not eps > threshold:
        raise InfeasibleBudgetError(
            f"eps={eps} violates eps > eps_v + 2(1+eps_v)sqrt(2(C-1)n) = {threshold:.6g} "
            f"for n={n} and oracle errors {errors.to_dict()}; need eps > {threshold:.6g}",
            min_eps=threshold,
        )
    eps_tilde = (eps - errors.eps_v) / (1 + errors.eps_v)
    c_tilde = _c_tilde(n, errors)
    denom = eps_tilde * eps_tilde - 8 * (c_tilde - 1) * n
    t_budget = 24 * LN2 * (1 + eps_tilde) * n / denom
    return DerivedConstants(n=n, eps=eps, errors=errors, eps_tilde=eps_tilde, c_tilde=c_tilde, t_budget=t_budget)


@dataclass(frozen=True)
class EstimateReport:
    """Outcome of :func:`approx_union` (or of the median run chosen by :func:`amplify`)."""

    estimate: float
    trials_m: int
    steps_t: int
    per_body_volumes: tuple[float, ...]
    v_prime_total: float
    constants: DerivedConstants
    seed: int
    wall_time: float
    method: str = "batched"
    runs: int = 1
    failed_runs: int = 0
    run_estimates: tuple[float, ...] | None = None

    @property
    def n(self) -> int:
        return len(self.per_body_volumes)

    def to_dict(self, timing: bool = False) -> dict:
        c = self.constants
        out = {
            "estimate": self.estimate,
            "trials_m": self.trials_m,
            "steps_t": self.steps_t,
            "n": self.n,
            "per_body_volumes": list(self.per_body_volumes),
            "v_prime_total": self.v_prime_total,
            "params": {"eps": c.eps, **c.errors.to_dict()},
            "derived": c.to_dict(),
            "seed": self.seed,
            "method": self.method,
            "runs": self.runs,
            "failed_runs": self.failed_runs,
        }
        if self.run_estimates is not None:
            out["run_estimates"] = [e if math.isfinite(e) else None for e in self.run_estimates]
        if timing:
            out["wall_time"] = self.wall_time
        return out


class BodyPicker:
    """Draw body indices with probability proportional to their volumes.

    Prefix sums with binary search; ``O(log n)`` per draw.
    """

    def __init__(self, volumes):
        v = np.asarray(volumes, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise ContractError("volumes must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise ContractError(f"all volumes must be positive and finite, got {v.tolist()}")
        self.prefix = np.cumsum(v)
        self.total = float(self.prefix[-1])

    def pick(self, rng, size=None):
        u = rng.random(size) * self.total
        idx = np.searchsorted(self.prefix, u, side="right")
        idx = np.minimum(idx, self.prefix.size - 1)
        return int(idx) if size is None else idx


def body_picker(volumes, rng) -> int:
    """One index ``i`` drawn with probability ``volumes[i] / sum(volumes)``."""
    return BodyPicker(volumes).pick(rng)


def _effective_errors(bodies, params: EstimatorParams) -> OracleErrors:
    return OracleErrors.worst([params.errors] + [b.errors for b in bodies])


def _stepwise(bodies, picker, n, T, rng):
    trials = 0
    total = 0
    while True:
        x = bodies[picker.pick(rng)].sample(rng)
        t = 0
        while True:
            if total + t >= T:
                return trials, total + t
            j = int(rng.integers(n))
            t += 1
            if bodies[j].point_query(x):
                break
        total += t
        trials += 1


def _batched(bodies, picker, n, T, rng, batch):
    # Membership is deterministic, so the number of uniform body draws until
    # the first hit on a point covered k times is Geometric(k / n).
    never = math.ceil(T) + 1
    trials = 0
    total = 0
    d = bodies[0].dim
    while True:
        idx = picker.pick(rng, batch)
        X = np.empty((batch, d))
        for i in np.unique(idx):
            rows = np.flatnonzero(idx == i)
            X[rows] = bodies[i].sample(rng, rows.size)
        cover = np.zeros(batch, dtype=np.int64)
        for body in bodies:
            cover += body.contains(X)
        hit = cover > 0
        t = rng.geometric(np.where(hit, cover / n, 1.0))
        t[~hit] = never
        finish = total + np.cumsum(t)
        # Trial m completes iff its last draw happened while the running total was below T.
        done = int(np.searchsorted(finish - 1 >= T, True))
        if done < batch:
            start = total if done == 0 else int(finish[done - 1])
            return trials + done, max(start, math.ceil(T))
        trials += batch
        total = int(finish[-1])


def approx_union(bodies, params: EstimatorParams, rng=None, *, method: str = "batched",
                 batch_size: int = DEFAULT_BATCH) -> EstimateReport:
    """Estimate the volume of the union of ``bodies`` to relative accuracy ``params.eps``.

    The oracle error ratios used for the step budget are the component-wise
    maximum of ``params.errors`` and every body's declared ``errors``.

    ``method="stepwise"`` runs the trial loop one body draw and one membership
    query at a time. ``method="batched"`` (the default) draws trials in
    batches, evaluates the coverage count of each sampled point against all
    bodies at once, and draws the step count of each trial from the geometric
    law that the one-at-a-time loop induces; the two have the same output
    distribution for deterministic membership oracles.

    Raises:
        InfeasibleBudgetError: if the oracle errors are too large for ``eps``.
        NoCompletedTrialError: if the budget ran out before the first trial finished.
    """
    t0 = time.perf_counter()
    bodies, _ = check_bodies(bodies)
    n = len(bodies)
    eff = replace(params, errors=_effective_errors(bodies, params))
    constants = derived_constants(n, eff)
    rng = as_generator(params.seed if rng is None else rng)
    volumes = tuple(float(b.volume()) for b in bodies)
    picker = BodyPicker(volumes)
    T = constants.t_budget
    if method == "stepwise":
        trials, steps = _stepwise(bodies, picker, n, T, rng)
    elif method == "batched":
        if batch_size < 1:
            raise ContractError("batch_size must be positive")
        trials, steps = _batched(bodies, picker, n, T, rng, int(batch_size))
    else:
        raise ContractError(f"unknown method {method!r}; use 'batched' or 'stepwise'")
    if trials == 0:
        raise NoCompletedTrialError(f"budget T={T:.6g} exhausted before the first trial completed")
    v_total = picker.total
    return EstimateReport(
        estimate=T * v_total / (n * trials),
        trials_m=trials,
        steps_t=steps,
        per_body_volumes=volumes,
        v_prime_total=v_total,
        constants=constants,
        seed=params.seed,
        wall_time=time.perf_counter() - t0,
        method=method,
    )


def amplification_runs(delta: float) -> int:
    """Number of independent runs whose median fails with probability at most ``delta``."""
    delta = check_ratio(delta, "delta", allow_zero=False)
    return max(1, math.ceil(24 * math.log(1.0 / delta)))


def amplify(bodies, params: EstimatorParams, target_failure: float, rng=None, *, threads: int = 1,
            **kwargs) -> EstimateReport:
    """Median of ``ceil(24 ln(1/delta))`` independent :func:`approx_union` runs.

    Each run gets its own child stream spawned from the root generator, so
    the result does not depend on ``threads``. Runs that end without a
    completed trial count as ``+inf``; the reported run is the lower median.

    Raises:
        AmplificationError: if more than half of the runs failed.
    """
    t0 = time.perf_counter()
    r = amplification_runs(target_failure)
    root = as_generator(params.seed if rng is None else rng)
    children = root.spawn(r)

    def one(child):
        try:
            return approx_union(bodies, params, child, **kwargs)
        except NoCompletedTrialError:
            return None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            reports = list(pool.map(one, children))
    else:
        reports = [one(c) for c in children]
    failed = sum(rep is None for rep in reports)
    if 2 * failed > r:
        raise AmplificationError(f"{failed} of {r} runs finished without a completed trial", failed=failed, runs=r)
    estimates = tuple(math.inf if rep is None else rep.estimate for rep in reports)
    median = statistics.median_low(estimates)
    chosen = next(rep for rep in reports if rep is not None and rep.estimate == median)
    return replace(chosen, runs=r, failed_runs=failed, run_estimates=estimates,
                   wall_time=time.perf_counter() - t0)
