"""Independent reference computations used only by the tests."""

from itertools import combinations
import math

import numpy as np


def inclusion_exclusion_union(boxes):
    """Union volume of axis boxes by the 2^n-term inclusion-exclusion formula."""
    total = 0.0
    n = len(boxes)
    for r in range(1, n + 1):
        for combo in combinations(boxes, r):
            lo = np.max([b.lo for b in combo], axis=0)
            hi = np.min([b.hi for b in combo], axis=0)
            if np.all(hi > lo):
                total += (-1) ** (r + 1) * float(np.prod(hi - lo))
    return total


def brute_force_sat(d, clauses, negated=False):
    """Count assignments of a monotone CNF by looping over tuples of booleans."""
    from itertools import product

    count = 0
    for bits in product([False, True], repeat=d):
        value = all(any(bits[v - 1] for v in clause) for clause in clauses)
        count += (not value) if negated else value
    return count


def lens_area(r, dist):
    """Area of the intersection of two discs of radius r whose centres are dist apart."""
    if dist >= 2 * r:
        return 0.0
    return 2 * r * r * math.acos(dist / (2 * r)) - 0.5 * dist * math.sqrt(4 * r * r - dist * dist)
