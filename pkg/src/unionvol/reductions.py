"""Exact reference oracles and the monotone-CNF hardness constructions.

A monotone CNF ``f`` with clauses ``C_1..C_n`` over ``d`` variables maps to

* ``n`` origin-anchored boxes whose union has volume ``#sat(not f)``
  (side 1 on the clause's axes, 2 elsewhere), and
* ``n`` co-boxes whose intersection, times ``2^d``, equals ``#sat(f)``
  (corner 1/2 on the clause's axes, 1 elsewhere).

Both identities are checked here against brute-force counting and an exact
coordinate-compression sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bodies import AxisBox, CoBox
from .exceptions import BudgetError, ContractError, SpecParseError
from .validation import as_generator, check_bodies, check_ratio
from .weak_oracles import MAX_SAMPLES, hoeffding_samples

__all__ = [
    "MonotoneCnf",
    "count_sat_brute",
    "random_monotone_cnf",
    "random_cnf_corpus",
    "cnf_to_kmp",
    "cnf_to_coboxes",
    "exact_union_axis_boxes",
    "exact_cobox_intersection",
    "union_bounding_box",
    "mc_reference_union",
    "parse_mcnf",
    "format_mcnf",
]

MAX_ENUM_VARS = 25
MAX_CELLS = 10**7
_ENUM_CHUNK = 1 << 20
_CELL_CHUNK = 1 << 16


@dataclass(frozen=True)
class MonotoneCnf:
    """A CNF formula without negations: ``AND_k OR_{i in clauses[k]} x_i``.

    Variables are numbered ``1..d``. Clauses are stored as sorted tuples with
    duplicates removed.
    """

    d: int
    clauses: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if not isinstance(self.d, (int, np.integer)) or self.d < 1:
            raise ContractError(f"d must be a positive integer, got {self.d!r}")
        norm = []
        for k, clause in enumerate(self.clauses):
            lits = sorted({int(v) for v in clause})
            if not lits:
                raise ContractError(f"clause {k} is empty")
            if lits[0] < 1 or lits[-1] > self.d:
                raise ContractError(f"clause {k} uses variables outside 1..{self.d}: {lits}")
            norm.append(tuple(lits))
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "clauses", tuple(norm))

    @property
    def n(self) -> int:
        return len(self.clauses)

    def masks(self) -> list[int]:
        """Each clause as a bit mask, variable ``i`` on bit ``i - 1``."""
        return [sum(1 << (v - 1) for v in clause) for clause in self.clauses]


def count_sat_brute(cnf: MonotoneCnf, negated: bool = False, *, max_vars: int = MAX_ENUM_VARS) -> int:
    """Count satisfying assignments of ``f`` (or of its negation) by full enumeration."""
    if cnf.d > max_vars:
        raise BudgetError(f"enumerating 2^{cnf.d} assignments exceeds the guard of 2^{max_vars}")
    masks = np.array(cnf.masks(), dtype=np.int64)
    total = 1 << cnf.d
    sat = 0
    for start in range(0, total, _ENUM_CHUNK):
        a = np.arange(start, min(start + _ENUM_CHUNK, total), dtype=np.int64)
        ok = np.ones(a.size, dtype=bool)
        for m in masks:
            ok &= (a & m) != 0
        sat += int(np.count_nonzero(~ok if negated else ok))
    return sat


def random_monotone_cnf(rng, d: int, n: int) -> MonotoneCnf:
    """Each clause takes every variable independently with probability 1/2; empty clauses are redrawn."""
    rng = as_generator(rng)
    clauses = []
    while len(clauses) < n:
        pick = rng.random(d) < 0.5
        if pick.any():
            clauses.append(tuple(int(i) + 1 for i in np.flatnonzero(pick)))
    return MonotoneCnf(d, tuple(clauses))


def random_cnf_corpus(count: int = 200, max_d: int = 8, max_n: int = 6, seed: int = 20110) -> list[MonotoneCnf]:
    """A reproducible list of random formulas with ``d <= max_d`` and ``1 <= n <= max_n``."""
    rng = as_generator(seed)
    out = []
    for _ in range(count):
        d = int(rng.integers(1, max_d + 1))
        n = int(rng.integers(1, max_n + 1))
        out.append(random_monotone_cnf(rng, d, n))
    return out


def cnf_to_kmp(cnf: MonotoneCnf) -> list[AxisBox]:
    """Boxes ``[0, q_1] x ... x [0, q_d]`` with ``q_i = 1`` on the clause's variables and 2 elsewhere."""
    boxes = []
    for clause in cnf.clauses:
        hi = np.full(cnf.d, 2.0)
        hi[[v - 1 for v in clause]] = 1.0
        boxes.append(AxisBox(np.zeros(cnf.d), hi))
    return boxes


def cnf_to_coboxes(cnf: MonotoneCnf) -> list[CoBox]:
    """Co-boxes with corner ``p_i = 1/2`` on the clause's variables and 1 elsewhere."""
    out = []
    for clause in cnf.clauses:
        p = np.ones(cnf.d)
        p[[v - 1 for v in clause]] = 0.5
        out.append(CoBox(p))
    return out


def _grid_volume(breaks: list[np.ndarray], member, max_cells: int) -> float:
    """Sum the volumes of the elementary grid cells whose centres satisfy ``member``."""
    shape = tuple(b.size - 1 for b in breaks)
    cells = math.prod(shape)
    if cells > max_cells:
        raise BudgetError(f"coordinate grid has {cells} cells, above the guard of {max_cells}; "
                          "use mc_reference_union instead")
    mids = [0.5 * (b[1:] + b[:-1]) for b in breaks]
    widths = [np.diff(b) for b in breaks]
    parts = []
    for start in range(0, cells, _CELL_CHUNK):
        flat = np.arange(start, min(start + _CELL_CHUNK, cells))
        idx = np.unravel_index(flat, shape)
        centers = np.column_stack([m[i] for m, i in zip(mids, idx)])
        keep = member(centers)
        if keep.any():
            vol = np.ones(int(keep.sum()))
            for w, i in zip(widths, idx):
                vol *= w[i[keep]]
            parts.append(float(np.sum(vol)))
    return math.fsum(parts)


def _integral(arrays) -> bool:
    return all(np.all(a == np.round(a)) for a in arrays)


def exact_union_axis_boxes(boxes, *, max_cells: int = MAX_CELLS) -> float:
    """Exact volume of a union of axis boxes by coordinate compression.

    The distinct box endpoints on each axis cut space into elementary cells
    that no box boundary crosses, so a cell belongs to the union iff its
    centre does. The result is rounded to an integer when every endpoint is
    an integer.

    Raises:
        BudgetError: if the grid has more than ``max_cells`` cells.
    """
    boxes, d = check_bodies(boxes)
    for i, b in enumerate(boxes):
        if not isinstance(b, AxisBox):
            raise ContractError(f"boxes[{i}] is a {type(b).__name__}, not an AxisBox")
    lo = np.array([b.lo for b in boxes])
    hi = np.array([b.hi for b in boxes])
    breaks = [np.unique(np.concatenate([lo[:, j], hi[:, j]])) for j in range(d)]

    def member(C):
        covered = np.zeros(len(C), dtype=bool)
        for b in boxes:
            covered |= np.all((C >= b.lo) & (C <= b.hi), axis=1)
        return covered

    vol = _grid_volume(breaks, member, max_cells)
    return float(round(vol)) if _integral([lo, hi]) else vol


def exact_cobox_intersection(coboxes, d: int | None = None, *, max_cells: int = MAX_CELLS) -> float:
    """Exact volume of an intersection of co-boxes by the same cell decomposition.

    The breakpoints on axis ``i`` are 0, 1 and every ``p_i``; for corners in
    ``{1/2, 1}`` this is the lattice of side-1/2 cells. An empty list means
    the whole unit cube, of dimension ``d``.
    """
    coboxes = list(coboxes)
    if not coboxes:
        if d is None:
            raise ContractError("d is required for an empty intersection")
        return 1.0
    coboxes, dim = check_bodies(coboxes)
    if d is not None and d != dim:
        raise ContractError(f"co-boxes have dimension {dim}, expected {d}")
    P = np.array([c.p for c in coboxes])
    breaks = [np.unique(np.concatenate([[0.0, 1.0], P[:, j]])) for j in range(dim)]

    def member(C):
        ok = np.ones(len(C), dtype=bool)
        for c in coboxes:
            ok &= c.contains(C)
        return ok

    return _grid_volume(breaks, member, max_cells)


def union_bounding_box(bodies) -> AxisBox:
    bodies, _ = check_bodies(bodies)
    boxes = [b.bounding_box() for b in bodies]
    return AxisBox(np.min([b.lo for b in boxes], axis=0), np.max([b.hi for b in boxes], axis=0))


def mc_reference_union(bodies, alpha: float, delta: float, rng=None, *, max_samples: int = MAX_SAMPLES) -> float:
    """Monte-Carlo union volume with absolute error ``alpha * Vol(bbox)`` w.p. ``1 - delta``.

    ``bbox`` is the smallest axis box holding every body's bounding box; the
    sample size is the Hoeffding bound for that absolute error.
    """
    bodies, _ = check_bodies(bodies)
    alpha = check_ratio(alpha, "alpha", allow_zero=False)
    delta = check_ratio(delta, "delta", allow_zero=False)
    rng = as_generator(rng)
    bbox = union_bounding_box(bodies)
    N = hoeffding_samples(alpha, delta, max_samples)
    hits = 0
    for start in range(0, N, _ENUM_CHUNK):
        X = bbox.sample(rng, min(_ENUM_CHUNK, N - start))
        covered = np.zeros(len(X), dtype=bool)
        for b in bodies:
            covered |= b.contains(X)
        hits += int(np.count_nonzero(covered))
    return bbox.volume() * hits / N


def parse_mcnf(text: str) -> MonotoneCnf:
    """Parse the ``p mcnf <d> <n>`` text format: a header then one clause per line.

    Blank lines and lines starting with ``c`` are comments.
    """
    header = None
    clauses = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        tokens = line.split()
        if header is None:
            if len(tokens) != 4 or tokens[:2] != ["p", "mcnf"]:
                raise SpecParseError("expected header 'p mcnf <d> <n>'", f"line {lineno}")
            try:
                header = (int(tokens[2]), int(tokens[3]))
            except ValueError:
                raise SpecParseError("header counts must be integers", f"line {lineno}") from None
            continue
        try:
            lits = [int(t) for t in tokens]
        except ValueError:
            raise SpecParseError("clause entries must be integers", f"line {lineno}") from None
        if lits and lits[-1] == 0:
            lits = lits[:-1]
        if not lits or any(v < 1 or v > header[0] for v in lits):
            raise SpecParseError(f"clause must list variables in 1..{header[0]}", f"line {lineno}")
        clauses.append(tuple(lits))
    if header is None:
        raise SpecParseError("missing 'p mcnf' header")
    if len(clauses) != header[1]:
        raise SpecParseError(f"header announces {header[1]} clauses, found {len(clauses)}")
    try:
        return MonotoneCnf(header[0], tuple(clauses))
    except ContractError as exc:
        raise SpecParseError(str(exc)) from None


def format_mcnf(cnf: MonotoneCnf) -> str:
    lines = [f"p mcnf {cnf.d} {cnf.n}"]
    lines += [" ".join(map(str, clause)) for clause in cnf.clauses]
    return "\n".join(lines) + "\n"
