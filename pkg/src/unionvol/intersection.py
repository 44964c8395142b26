"""Additive approximation of the volume of an intersection of bodies.

Relative approximation of intersections is hopeless in general, so the
estimator only promises ``|V_est - V| <= eps * V_min`` with probability at
least 3/4, where ``V_min`` is the smallest body volume: sample the smallest
body and count the points that all bodies contain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .validation import as_generator, check_bodies, check_ratio

__all__ = ["IntersectionReport", "n_from_eps", "approx_intersection"]


@dataclass(frozen=True)
class IntersectionReport:
    estimate: float
    v_min: float
    min_index: int
    samples_n: int
    hits: int
    n: int
    eps: float
    seed: int | None
    selection_slack: float = 1.0

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "v_min": self.v_min,
            "min_index": self.min_index,
            "samples_n": self.samples_n,
            "hits": self.hits,
            "n": self.n,
            "params": {"eps": self.eps},
            "selection_slack": self.selection_slack,
            "seed": self.seed,
        }


def n_from_eps(eps: float) -> int:
    """Sample count ``ceil(1 / eps^2)``, the least N with Chebyshev failure ``1/(4 N eps^2) <= 1/4``.

    Computed in exact rational arithmetic on the float ``eps``.
    """
    eps = check_ratio(eps, "eps", allow_zero=False)
    return math.ceil(1 / Fraction(eps) ** 2)


def approx_intersection(bodies, eps: float, rng=None, *, seed: int | None = None) -> IntersectionReport:
    """Estimate ``Vol(B_1 & ... & B_n)`` to within ``eps * V_min`` (probability >= 3/4).

    Draws ``n_from_eps(eps)`` points from the body with the smallest reported
    volume (ties go to the lowest index) and scales the fraction lying in
    every body by that volume. ``rng`` defaults to a generator seeded with
    ``seed`` (or 0).
    """
    bodies, _ = check_bodies(bodies)
    eps = check_ratio(eps, "eps", allow_zero=False)
    rng = as_generator(seed if rng is None else rng)
    volumes = [float(b.volume()) for b in bodies]
    k = int(np.argmin(volumes))
    v_min = volumes[k]
    N = n_from_eps(eps)
    X = bodies[k].sample(rng, N)
    inside = np.ones(N, dtype=bool)
    for body in bodies:
        inside &= body.contains(X)
    hits = int(np.count_nonzero(inside))
    ev = max(b.errors.eps_v for b in bodies)
    return IntersectionReport(
        estimate=v_min * hits / N,
        v_min=v_min,
        min_index=k,
        samples_n=N,
        hits=hits,
        n=len(bodies),
        eps=eps,
        seed=seed,
        selection_slack=(1 + ev) / (1 - ev),
    )
