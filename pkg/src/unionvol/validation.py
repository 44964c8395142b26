"""Input validation helpers used by the bodies, estimators and CLI."""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np

from .exceptions import ContractError


def as_generator(random_state=None) -> np.random.Generator:
    """Turn ``None``, an int seed, a SeedSequence or a Generator into a Generator.

    Unlike :func:`numpy.random.default_rng`, ``None`` maps to seed 0 so that
    nothing in the package is entropy-seeded by accident.
    """
    if isinstance(random_state, np.random.Generator):
        return random_state
    if random_state is None:
        random_state = 0
    if isinstance(random_state, (int, np.integer, np.random.SeedSequence)):
        return np.random.default_rng(random_state)
    raise ContractError(f"cannot build a random generator from {random_state!r}")


def check_vector(values, name: str, dim: int | None = None) -> np.ndarray:
    """Return ``values`` as a read-only finite 1-d float64 array."""
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ContractError(f"{name} must be a non-empty 1-d vector, got shape {arr.shape}")
    if dim is not None and arr.size != dim:
        raise ContractError(f"{name} has length {arr.size}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise ContractError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


def check_points(X, dim: int) -> np.ndarray:
    """Return ``X`` as a ``(k, dim)`` float array; a single point becomes ``(1, dim)``."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ContractError(f"expected points of dimension {dim}, got array of shape {np.shape(X)}")
    return arr


def check_ratio(value, name: str, *, upper: float | None = 1.0, allow_zero: bool = True) -> float:
    """Validate a real in ``[0, upper)`` (or ``(0, upper)``) and return it as float."""
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ContractError(f"{name} must be a real number, got {value!r}") from None
    if not math.isfinite(value):
        raise ContractError(f"{name} must be finite, got {value}")
    if value < 0 or (value == 0 and not allow_zero):
        raise ContractError(f"{name} must be {'non-negative' if allow_zero else 'positive'}, got {value}")
    if upper is not None and value >= upper:
        raise ContractError(f"{name} must be < {upper}, got {value}")
    return value


def check_bodies(bodies) -> tuple[list, int]:
    """Check a non-empty collection of bodies sharing one dimension.

    Returns the bodies as a list together with their common dimension.
    """
    from .bodies import Body

    if isinstance(bodies, Body):
        bodies = [bodies]
    if not isinstance(bodies, Sequence):
        bodies = list(bodies)
    if len(bodies) == 0:
        raise ContractError("at least one body is required")
    for i, body in enumerate(bodies):
        if not isinstance(body, Body):
            raise ContractError(f"bodies[{i}] is {type(body).__name__}, not a Body")
    dims = {body.dim for body in bodies}
    if len(dims) != 1:
        raise ContractError(f"bodies live in different dimensions: {sorted(dims)}")
    return list(bodies), dims.pop()
