"""Approximate oracles for bodies known only by a membership test and a bounding box.

Membership is exact. Sampling by rejection from the bounding box is exactly
uniform. Only the volume is approximate: :func:`mc_volume` counts hits of
uniform bounding-box points with a Hoeffding-sized sample, so it holds its
relative error with probability ``1 - delta`` rather than surely. A body
must be :func:`calibrate`-d before its volume oracle can be used.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .bodies import AxisBox, Body, OracleErrors
from .exceptions import BudgetError, ContractError, EmptyBodyError, SamplingTimeoutError
from .validation import check_points, check_ratio

__all__ = [
    "MembershipBody",
    "HPolytope",
    "WeakVolumeResult",
    "hoeffding_samples",
    "mc_volume",
    "calibrate",
    "rejection_sample",
    "rejection_sample_many",
    "lemma_budget",
    "error_budget_check",
]

MAX_SAMPLES = 10**11
DEFAULT_MAX_TRIES = 10**6
_CHUNK = 1 << 21


class MembershipBody(Body):
    """A body given by a membership predicate inside a known bounding box.

    Args:
        membership: predicate on points. With ``vectorized=True`` it receives a
            ``(k, d)`` array and returns ``k`` booleans, otherwise it is called
            once per point.
        bbox: an :class:`AxisBox` that contains the whole body.
        fill_lower_bound: caller's guarantee that ``Vol(body) / Vol(bbox)`` is
            at least this large; sizes the Monte-Carlo volume oracle.
        volume_estimate: a previously computed volume; normally set by
            :func:`calibrate`.
    """

    def __init__(self, membership, bbox: AxisBox, fill_lower_bound: float | None = None, *,
                 vectorized: bool = False, volume_estimate: float | None = None,
                 errors: OracleErrors | None = None):
        if not isinstance(bbox, AxisBox):
            raise ContractError("bbox must be an AxisBox")
        if fill_lower_bound is not None:
            fill_lower_bound = float(fill_lower_bound)
            if not (0 < fill_lower_bound <= 1):
                raise ContractError(f"fill_lower_bound must lie in (0, 1], got {fill_lower_bound}")
        self.membership = membership
        self.vectorized = vectorized
        self.bbox = bbox
        self.dim = bbox.dim
        self.fill_lower_bound = fill_lower_bound
        self.volume_estimate = volume_estimate
        self.errors = errors or OracleErrors()

    def _member(self, X):
        if self.vectorized:
            return np.asarray(self.membership(X), dtype=bool).reshape(len(X))
        return np.fromiter((bool(self.membership(x)) for x in X), dtype=bool, count=len(X))

    def _member_in_bbox(self, X):
        """Membership for points already known to lie in the bounding box."""
        return self._member(X)

    def contains(self, X):
        X = check_points(X, self.dim)
        inside = self.bbox.contains(X)
        out = np.zeros(len(X), dtype=bool)
        if inside.any():
            out[inside] = self._member_in_bbox(X[inside])
        return out

    def volume(self):
        if self.volume_estimate is None:
            raise ContractError(f"{type(self).__name__} has no volume yet; calibrate it with mc_volume first")
        return self.volume_estimate

    def sample(self, rng, size=None):
        pts, _ = rejection_sample_many(self, rng, 1 if size is None else size)
        return pts[0] if size is None else pts

    def bounding_box(self):
        return self.bbox

    def with_volume(self, value: float, errors: OracleErrors) -> MembershipBody:
        """A copy of this body whose volume oracle reports ``value``."""
        out = copy.copy(self)
        out.volume_estimate = float(value)
        out.errors = errors
        return out


class HPolytope(MembershipBody):
    """The polytope ``{x : A x <= b}``.

    When ``bbox`` is omitted it is computed by linear programming; a supplied
    ``bbox`` is checked the same way. Rows implied by the bounding box are
    skipped by the membership test.
    """

    def __init__(self, A, b, bbox: AxisBox | None = None, fill_lower_bound: float | None = None, *,
                 volume_estimate: float | None = None, errors: OracleErrors | None = None):
        A = np.array(A, dtype=np.float64)
        b = np.array(b, dtype=np.float64)
        if A.ndim != 2 or A.shape[0] == 0 or A.shape[1] == 0:
            raise ContractError(f"A must be a non-empty m x d matrix, got shape {A.shape}")
        if b.shape != (A.shape[0],):
            raise ContractError(f"b must have {A.shape[0]} entries, got shape {b.shape}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ContractError("A and b must be finite")
        lp_box = _polytope_bbox(A, b)
        if bbox is None:
            bbox = lp_box
        else:
            tol = 1e-9 * (1 + np.abs(lp_box.lo) + np.abs(lp_box.hi))
            if bbox.dim != A.shape[1] or np.any(lp_box.lo < bbox.lo - tol) or np.any(lp_box.hi > bbox.hi + tol):
                raise ContractError(f"bbox {bbox!r} does not contain the polytope (its extent is {lp_box!r})")
        self.A = A
        self.b = b
        for arr in (self.A, self.b):
            arr.setflags(write=False)
        # A row can be skipped inside bbox when its maximum over bbox is <= b_i.
        row_max = np.maximum(A * bbox.lo, A * bbox.hi).sum(axis=1)
        keep = row_max > b
        self._A_active = np.ascontiguousarray(A[keep].T)
        self._b_active = b[keep]
        super().__init__(self._member, bbox, fill_lower_bound, vectorized=True,
                         volume_estimate=volume_estimate, errors=errors)

    def _member(self, X):
        return np.all(X @ self.A.T <= self.b, axis=1)

    def _member_in_bbox(self, X):
        if self._b_active.size == 0:
            return np.ones(len(X), dtype=bool)
        return np.all(X @ self._A_active <= self._b_active, axis=1)

    def __repr__(self):
        return f"HPolytope(A={self.A.tolist()}, b={self.b.tolist()})"


def _polytope_bbox(A, b) -> AxisBox:
    d = A.shape[1]
    lo = np.empty(d)
    hi = np.empty(d)
    for i in range(d):
        for sign, out in ((1.0, lo), (-1.0, hi)):
            c = np.zeros(d)
            c[i] = sign
            res = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * d, method="highs")
            if res.status == 2:
                raise EmptyBodyError("polytope {x : A x <= b} is empty")
            if res.status != 0:
                raise ContractError(f"polytope is unbounded along axis {i} (linprog: {res.message})")
            out[i] = sign * res.fun
    if np.any(hi <= lo):
        raise EmptyBodyError("polytope has empty interior")
    return AxisBox(lo, hi)


@dataclass(frozen=True)
class WeakVolumeResult:
    value: float
    eps_v: float
    delta: float
    samples_used: int
    hits: int


def hoeffding_samples(abs_error: float, delta: float, max_samples: int = MAX_SAMPLES) -> int:
    """Smallest N with ``2 exp(-2 N abs_error^2) <= delta``, for a mean of [0,1] variables."""
    if not abs_error > 0:
        raise ContractError(f"absolute error must be positive, got {abs_error}")
    n = math.ceil(math.log(2.0 / delta) / (2.0 * abs_error * abs_error))
    if n > max_samples:
        raise BudgetError(f"Hoeffding budget needs N={n} samples, above the limit {max_samples}")
    return max(n, 1)


def _count_hits(member, bbox: AxisBox, n: int, rng, chunk: int = _CHUNK) -> int:
    lo, width = bbox.lo, bbox.hi - bbox.lo
    buf = np.empty((min(chunk, n), bbox.dim))
    hits = 0
    left = n
    while left > 0:
        k = min(chunk, left)
        X = buf[:k]
        rng.random(out=X)
        X *= width
        X += lo
        hits += int(np.count_nonzero(member(X)))
        left -= k
    return hits


def mc_volume(body: MembershipBody, eps_v: float, delta: float, rng, *, max_samples: int = MAX_SAMPLES) -> WeakVolumeResult:
    """Estimate a body's volume by counting hits of uniform bounding-box points.

    The sample size ``N = ceil(ln(2/delta) / (2 (eps_v * rho)^2))`` makes the
    hit fraction accurate to ``eps_v * rho`` with probability ``1 - delta``
    (Hoeffding), which is a relative error of at most ``eps_v`` whenever the
    true fill ratio is at least ``rho = body.fill_lower_bound``.

    Raises:
        BudgetError: if ``N`` exceeds ``max_samples``.
        EmptyBodyError: if no sample hits the body.
    """
    eps_v = check_ratio(eps_v, "eps_v", allow_zero=False)
    delta = check_ratio(delta, "delta", allow_zero=False)
    rho = body.fill_lower_bound
    if rho is None:
        raise ContractError("mc_volume needs the body's fill_lower_bound")
    n = hoeffding_samples(eps_v * rho, delta, max_samples)
    hits = _count_hits(body._member_in_bbox, body.bbox, n, rng)
    if hits == 0:
        raise EmptyBodyError(f"no hits in {n} samples; the body looks empty")
    return WeakVolumeResult(value=body.bbox.volume() * hits / n, eps_v=eps_v, delta=delta,
                            samples_used=n, hits=hits)


def calibrate(body: MembershipBody, eps_v: float, delta: float, rng, **kwargs) -> MembershipBody:
    """Run :func:`mc_volume` and return a copy of ``body`` that reports the estimate.

    The copy declares ``eps_v`` as its volume error; membership and rejection
    sampling are exact, so its other error ratios are zero.
    """
    result = mc_volume(body, eps_v, delta, rng, **kwargs)
    return body.with_volume(result.value, OracleErrors(eps_v=eps_v))


def rejection_sample(body: MembershipBody, rng, max_tries: int = DEFAULT_MAX_TRIES) -> np.ndarray:
    """One uniform point of ``body``, drawn by rejection from its bounding box.

    Raises:
        SamplingTimeoutError: after ``max_tries`` consecutive rejections.
    """
    if max_tries < 1:
        raise ContractError("max_tries must be at least 1")
    for _ in range(max_tries):
        x = body.bbox.sample(rng)
        if body._member_in_bbox(x[np.newaxis, :])[0]:
            return x
    raise SamplingTimeoutError(f"{max_tries} consecutive rejections", tries=max_tries, accepted=0)


def rejection_sample_many(body: MembershipBody, rng, size: int, max_tries: int = DEFAULT_MAX_TRIES):
    """``size`` uniform points of ``body`` by batched rejection.

    Returns ``(points, tries)`` where ``tries`` counts every candidate drawn.

    Raises:
        SamplingTimeoutError: if ``max_tries`` consecutive candidates are rejected.
    """
    size = int(size)
    rho = body.fill_lower_bound or 0.5
    out = np.empty((size, body.dim))
    got = 0
    tries = 0
    since_accept = 0
    while got < size:
        need = size - got
        batch = int(min(max(64, math.ceil(1.1 * need / rho)), _CHUNK))
        X = body.bbox.sample(rng, batch)
        hit = np.flatnonzero(body._member_in_bbox(X))[:need]
        if hit.size == 0:
            consumed, longest, trailing = batch, 0, since_accept + batch
        else:
            consumed = int(hit[-1]) + 1 if hit.size == need else batch
            gaps = np.diff(hit, prepend=-1) - 1
            gaps[0] += since_accept
            longest = int(gaps.max())
            trailing = consumed - 1 - int(hit[-1])
        if max(longest, trailing) >= max_tries:
            raise SamplingTimeoutError(f"{max(longest, trailing)} consecutive rejections",
                                       tries=tries + consumed, accepted=got)
        out[got:got + hit.size] = X[hit]
        got += hit.size
        tries += consumed
        since_accept = trailing
    return out, tries


def lemma_budget(n: int, eps: float) -> OracleErrors:
    """Largest error ratios for which the union estimator's budget stays ``O(n / eps^2)``.

    These are ``eps^2/(47 n)`` for the volume and sampling errors and
    ``eps^2/(47 n^2)`` for the membership error.
    """
    return OracleErrors(eps_p=eps * eps / (47 * n * n), eps_v=eps * eps / (47 * n), eps_s=eps * eps / (47 * n))


def error_budget_check(n: int, eps: float, errors: OracleErrors) -> bool:
    """Whether ``errors`` fit within :func:`lemma_budget` for ``n`` bodies and accuracy ``eps``."""
    if n < 1:
        raise ContractError("n must be at least 1")
    eps = check_ratio(eps, "eps", allow_zero=False)
    sq = eps * eps
    return errors.eps_s <= sq / (47 * n) and errors.eps_v <= sq / (47 * n) and errors.eps_p <= sq / (47 * n * n)
