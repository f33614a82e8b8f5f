"""Non-dominated filtering for minimisation problems."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .exceptions import DimensionError, ValidationError


def _as_matrix(points) -> np.ndarray:
    if len(points) == 0:
        raise ValidationError("need at least one point")
    arity = {len(np.atleast_1d(p)) for p in points}
    if len(arity) != 1:
        raise DimensionError(f"objective vectors of mixed arity {sorted(arity)}")
    return np.array([np.atleast_1d(p) for p in points], dtype=float)


def dominates(a, b) -> bool:
    """``a`` is no worse than ``b`` everywhere and strictly better somewhere."""
    a, b = np.asarray(a), np.asarray(b)
    return bool(np.all(a <= b) and np.any(a < b))


def pareto_indices(points: Sequence) -> list[int]:
    """Indices of the non-dominated points, in input order."""
    P = _as_matrix(points)
    no_worse = np.all(P[:, None, :] <= P[None, :, :], axis=-1)
    better = np.any(P[:, None, :] < P[None, :, :], axis=-1)
    dominated = np.any(no_worse & better, axis=0)
    return [int(i) for i in np.flatnonzero(~dominated)]


def pareto_front(points: Sequence) -> list:
    return [points[i] for i in pareto_indices(points)]


def knee_index(points: Sequence) -> int:
    """Point closest to the ideal corner after per-objective min-max scaling.

    Objectives with zero spread contribute nothing. Ties go to the earliest
    point.
    """
    P = _as_matrix(points)
    low, high = P.min(axis=0), P.max(axis=0)
    span = np.where(high > low, high - low, 1.0)
    scaled = (P - low) / span
    return int(np.argmin(np.linalg.norm(scaled, axis=1)))
