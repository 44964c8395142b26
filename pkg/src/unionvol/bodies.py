"""Geometric bodies exposing membership, volume and sampling oracles.

Every body answers three questions: does it contain a point, what is its
volume, and can it produce a uniformly random point of itself. The bodies in
this module answer all three exactly; their declared error ratios default to
zero. Bodies are immutable once constructed and never touch global random
state: sampling always takes a :class:`numpy.random.Generator`.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import ContractError, EmptyBodyError
from .validation import check_points, check_ratio, check_vector

__all__ = [
    "OracleErrors",
    "Body",
    "AxisBox",
    "Ball",
    "BoxBallProduct",
    "AffineBody",
    "CoBox",
    "make_box_ball",
    "cobox_slabs",
    "point_query",
    "volume_query",
    "sample_query",
]

MAX_CONDITION = 1e12
INVERSE_TOL = 1e-9


@dataclass(frozen=True)
class OracleErrors:
    """Declared error ratios of a body's oracles.

    Attributes:
        eps_p: relative measure of the region where membership answers wrongly.
        eps_v: relative error of the reported volume.
        eps_s: relative deviation of the sampling density from uniform.
    """

    eps_p: float = 0.0
    eps_v: float = 0.0
    eps_s: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "eps_p", check_ratio(self.eps_p, "eps_p"))
        object.__setattr__(self, "eps_v", check_ratio(self.eps_v, "eps_v"))
        object.__setattr__(self, "eps_s", check_ratio(self.eps_s, "eps_s", upper=None))

    @classmethod
    def worst(cls, errors) -> OracleErrors:
        """Component-wise maximum over a collection of error declarations."""
        errors = list(errors)
        if not errors:
            return cls()
        return cls(
            eps_p=max(e.eps_p for e in errors),
            eps_v=max(e.eps_v for e in errors),
            eps_s=max(e.eps_s for e in errors),
        )

    @property
    def exact(self) -> bool:
        return self.eps_p == 0 and self.eps_v == 0 and self.eps_s == 0

    def to_dict(self) -> dict:
        return {"eps_p": self.eps_p, "eps_v": self.eps_v, "eps_s": self.eps_s}


def _checked_volume(value: float, what: str) -> float:
    if not math.isfinite(value):
        raise ContractError(f"volume of {what} overflows float64")
    if value <= 0:
        raise ContractError(f"volume of {what} underflows to {value}")
    return value


class Body(ABC):
    """A body in R^d reachable only through its three oracles.

    Subclasses implement :meth:`contains` (vectorised membership),
    :meth:`volume`, :meth:`sample` and :meth:`bounding_box`.
    """

    dim: int
    errors: OracleErrors

    @abstractmethod
    def contains(self, X) -> np.ndarray:
        """Membership of each row of the ``(k, d)`` array ``X``; returns a bool array."""

    def point_query(self, x) -> bool:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.dim,):
            raise ContractError(f"point has shape {x.shape}, body has dimension {self.dim}")
        return bool(self.contains(x[np.newaxis, :])[0])

    @abstractmethod
    def volume(self) -> float:
        """The (possibly approximate) volume reported by the volume oracle."""

    @abstractmethod
    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        """Uniform point(s) of the body: shape ``(d,)`` if ``size`` is None, else ``(size, d)``."""

    @abstractmethod
    def bounding_box(self) -> AxisBox:
        """An axis-parallel box containing the body."""

    def _resolve_size(self, size):
        return 1 if size is None else int(size)

    def _shape_output(self, pts, size):
        return pts[0] if size is None else pts


class AxisBox(Body):
    """The axis-parallel box ``[lo_1, hi_1] x ... x [lo_d, hi_d]``."""

    def __init__(self, lo, hi, errors: OracleErrors | None = None):
        self.lo = check_vector(lo, "lo")
        self.hi = check_vector(hi, "hi", self.lo.size)
        if not np.all(self.lo < self.hi):
            bad = int(np.argmin(self.lo < self.hi))
            raise ContractError(f"need lo < hi on every axis; axis {bad} has lo={self.lo[bad]}, hi={self.hi[bad]}")
        self.dim = self.lo.size
        self.errors = errors or OracleErrors()
        with np.errstate(over="ignore", under="ignore"):
            vol = float(np.prod(self.hi - self.lo))
        self._volume = _checked_volume(vol, "box")

    def contains(self, X):
        X = check_points(X, self.dim)
        return np.all((X >= self.lo) & (X <= self.hi), axis=1)

    def volume(self):
        return self._volume

    def sample(self, rng, size=None):
        k = self._resolve_size(size)
        pts = self.lo + (self.hi - self.lo) * rng.random((k, self.dim))
        return self._shape_output(pts, size)

    def bounding_box(self):
        return self

    def __repr__(self):
        return f"AxisBox(lo={self.lo.tolist()}, hi={self.hi.tolist()})"


class Ball(Body):
    """The closed Euclidean ball of the given centre and radius."""

    def __init__(self, center, radius: float, errors: OracleErrors | None = None):
        self.center = check_vector(center, "center")
        radius = float(radius)
        if not (math.isfinite(radius) and radius > 0):
            raise ContractError(f"radius must be a positive finite real, got {radius}")
        self.radius = radius
        self.dim = self.center.size
        self.errors = errors or OracleErrors()
        d = self.dim
        log_vol = 0.5 * d * math.log(math.pi) + d * math.log(radius) - math.lgamma(0.5 * d + 1)
        try:
            vol = math.exp(log_vol)
        except OverflowError:
            vol = math.inf
        self._volume = _checked_volume(vol, "ball")

    def contains(self, X):
        X = check_points(X, self.dim)
        diff = X - self.center
        return np.einsum("ij,ij->i", diff, diff) <= self.radius * self.radius

    def volume(self):
        return self._volume

    def sample(self, rng, size=None):
        # Gaussian direction, radius by inverse CDF of (t/r)^d.
        k = self._resolve_size(size)
        g = rng.standard_normal((k, self.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        u = rng.random(k)
        pts = self.center + g * (self.radius * u ** (1.0 / self.dim))[:, np.newaxis]
        return self._shape_output(pts, size)

    def bounding_box(self):
        return AxisBox(self.center - self.radius, self.center + self.radius)

    def __repr__(self):
        return f"Ball(center={self.center.tolist()}, radius={self.radius})"


def _check_perm(perm, d: int) -> np.ndarray:
    perm = np.asarray(perm)
    if perm.shape != (d,) or not np.issubdtype(perm.dtype, np.integer):
        raise ContractError(f"perm must be {d} integers, got {perm!r}")
    if sorted(perm.tolist()) != list(range(d)):
        raise ContractError(f"perm {perm.tolist()} is not a permutation of 0..{d - 1}")
    perm = perm.astype(np.intp)
    perm.setflags(write=False)
    return perm


class BoxBallProduct(Body):
    """A box times a ball, with the product's axes permuted.

    Canonical coordinate ``i`` of the product (the box axes first, then the
    ball axes) is stored on ambient axis ``perm[i]``. In R^3 this covers the
    cylinders.
    """

    def __init__(self, box: AxisBox, ball: Ball, perm=None, errors: OracleErrors | None = None):
        self.box = box
        self.ball = ball
        self.dim = box.dim + ball.dim
        self.perm = _check_perm(np.arange(self.dim) if perm is None else perm, self.dim)
        self.errors = errors or OracleErrors()
        self._volume = _checked_volume(box.volume() * ball.volume(), "box-ball product")

    def contains(self, X):
        X = check_points(X, self.dim)
        Z = X[:, self.perm]
        k = self.box.dim
        return self.box.contains(Z[:, :k]) & self.ball.contains(Z[:, k:])

    def volume(self):
        return self._volume

    def sample(self, rng, size=None):
        n = self._resolve_size(size)
        Z = np.hstack([self.box.sample(rng, n), self.ball.sample(rng, n)])
        pts = np.empty_like(Z)
        pts[:, self.perm] = Z
        return self._shape_output(pts, size)

    def bounding_box(self):
        bb = self.ball.bounding_box()
        lo = np.empty(self.dim)
        hi = np.empty(self.dim)
        lo[self.perm] = np.concatenate([self.box.lo, bb.lo])
        hi[self.perm] = np.concatenate([self.box.hi, bb.hi])
        return AxisBox(lo, hi)

    def __repr__(self):
        return f"BoxBallProduct({self.box!r}, {self.ball!r}, perm={self.perm.tolist()})"


def make_box_ball(box: AxisBox | None = None, ball: Ball | None = None, perm=None,
                  errors: OracleErrors | None = None) -> Body:
    """Build a box-ball product, collapsing to a plain box or ball when a factor is missing."""
    if box is None and ball is None:
        raise ContractError("a box-ball product needs at least one factor")
    if box is not None and ball is not None:
        return BoxBallProduct(box, ball, perm, errors)
    single = box if box is not None else ball
    perm = _check_perm(np.arange(single.dim) if perm is None else perm, single.dim)
    if isinstance(single, AxisBox):
        lo = np.empty(single.dim)
        hi = np.empty(single.dim)
        lo[perm] = single.lo
        hi[perm] = single.hi
        return AxisBox(lo, hi, errors)
    center = np.empty(single.dim)
    center[perm] = single.center
    return Ball(center, single.radius, errors)


class AffineBody(Body):
    """The image ``{M y + c : y in base}`` of another body under an invertible affine map."""

    def __init__(self, base: Body, matrix, offset=None, errors: OracleErrors | None = None):
        d = base.dim
        M = np.array(matrix, dtype=np.float64)
        if M.shape != (d, d):
            raise ContractError(f"matrix must be {d}x{d}, got shape {M.shape}")
        if not np.all(np.isfinite(M)):
            raise ContractError("matrix contains non-finite entries")
        cond = np.linalg.cond(M)
        if not (cond <= MAX_CONDITION):
            raise ContractError(f"matrix is singular or ill-conditioned (condition number {cond:.3g} > {MAX_CONDITION:g})")
        lu, piv = scipy.linalg.lu_factor(M)
        inverse = scipy.linalg.lu_solve((lu, piv), np.eye(d))
        residual = np.max(np.abs(inverse @ M - np.eye(d)))
        if residual > INVERSE_TOL:
            raise ContractError(f"matrix inverse is inaccurate (residual {residual:.3g})")
        self.base = base
        self.dim = d
        self.matrix = M
        self.offset = check_vector(np.zeros(d) if offset is None else offset, "offset", d)
        self.inverse = inverse
        self.det_abs = float(np.prod(np.abs(np.diag(lu))))
        for arr in (self.matrix, self.inverse):
            arr.setflags(write=False)
        # Relative error ratios are invariant under a volume-scaling map.
        self.errors = errors or base.errors
        self._volume = _checked_volume(self.det_abs * base.volume(), "affine body")

    def contains(self, X):
        X = check_points(X, self.dim)
        return self.base.contains((X - self.offset) @ self.inverse.T)

    def volume(self):
        return self._volume

    def sample(self, rng, size=None):
        n = self._resolve_size(size)
        pts = self.base.sample(rng, n) @ self.matrix.T + self.offset
        return self._shape_output(pts, size)

    def bounding_box(self):
        bb = self.base.bounding_box()
        mid = 0.5 * (bb.lo + bb.hi)
        half = 0.5 * (bb.hi - bb.lo)
        center = self.matrix @ mid + self.offset
        reach = np.abs(self.matrix) @ half
        return AxisBox(center - reach, center + reach)

    def __repr__(self):
        return f"AffineBody({self.base!r}, matrix={self.matrix.tolist()}, offset={self.offset.tolist()})"


def cobox_slabs(cb) -> list[tuple[AxisBox, float]]:
    """Split ``[0,1]^d`` minus the box ``[0,p]`` into disjoint axis boxes.

    Slab ``i`` is ``prod_{j<i}[0,p_j] x (p_i,1] x prod_{j>i}[0,1]`` with volume
    ``(prod_{j<i} p_j)(1 - p_i)``; zero-volume slabs are dropped. Accepts a
    :class:`CoBox` or a raw ``p`` vector.
    """
    p = cb.p if isinstance(cb, CoBox) else _check_corner(cb)
    d = p.size
    slabs = []
    prefix = 1.0
    for i in range(d):
        weight = prefix * (1.0 - p[i])
        if weight > 0:
            lo = np.zeros(d)
            hi = np.ones(d)
            hi[:i] = p[:i]
            lo[i] = p[i]
            slabs.append((AxisBox(lo, hi), weight))
        prefix *= p[i]
    if not slabs:
        raise EmptyBodyError(f"co-box with p={p.tolist()} is empty")
    return slabs


def _check_corner(p) -> np.ndarray:
    p = check_vector(p, "p")
    if np.any(p < 0) or np.any(p > 1):
        raise ContractError(f"co-box corner must lie in [0,1]^d, got {p.tolist()}")
    return p


class CoBox(Body):
    """The unit cube with the corner box ``[0,p_1] x ... x [0,p_d]`` cut out.

    Sampling picks one of the slabs from :func:`cobox_slabs` by volume and
    then a uniform point inside it, so it is exact for any ``p``.
    """

    def __init__(self, p, errors: OracleErrors | None = None):
        self.p = _check_corner(p)
        self.dim = self.p.size
        self.errors = errors or OracleErrors()
        self.slabs = tuple(cobox_slabs(self.p))
        self._slab_lo = np.array([box.lo for box, _ in self.slabs])
        self._slab_hi = np.array([box.hi for box, _ in self.slabs])
        weights = np.array([w for _, w in self.slabs])
        self._cum = np.cumsum(weights) / weights.sum()
        self._volume = _checked_volume(1.0 - float(np.prod(self.p)), "co-box")

    def contains(self, X):
        X = check_points(X, self.dim)
        in_cube = np.all((X >= 0) & (X <= 1), axis=1)
        return in_cube & np.any(X > self.p, axis=1)

    def volume(self):
        return self._volume

    def sample(self, rng, size=None):
        n = self._resolve_size(size)
        idx = np.searchsorted(self._cum, rng.random(n), side="right")
        np.minimum(idx, len(self.slabs) - 1, out=idx)
        hi = self._slab_hi[idx]
        # Sampling downward from hi keeps the open side (p_i, 1] open.
        pts = hi - (hi - self._slab_lo[idx]) * rng.random((n, self.dim))
        return self._shape_output(pts, size)

    def bounding_box(self):
        return AxisBox(np.zeros(self.dim), np.ones(self.dim))

    def __repr__(self):
        return f"CoBox(p={self.p.tolist()})"


def point_query(body: Body, x) -> bool:
    """Is the point ``x`` inside ``body``?"""
    return body.point_query(x)


def volume_query(body: Body) -> float:
    return body.volume()


def sample_query(body: Body, rng: np.random.Generator) -> np.ndarray:
    """One uniformly distributed point of ``body``."""
    return body.sample(rng)
