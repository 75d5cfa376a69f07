"""Pareto fronts, hypervolume and the non-dominated cell decomposition.

All objectives are minimized. Two and three objectives are supported exactly;
the grid decomposition has ``(k + 2) ** m`` cells, which is fine for fronts
of desk-scale size.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from gpopt._backend import kernels
from gpopt.errors import DimensionError

MAX_OBJECTIVES = 3


class ReferenceError(ValueError):
    """A front point does not strictly dominate the reference point."""


@dataclass(frozen=True, eq=False)
class ParetoFront:
    points: np.ndarray

    @property
    def m(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True, eq=False)
class CellDecomposition:
    lower: np.ndarray  # (cells, m)
    upper: np.ndarray
    reference: np.ndarray
    ideal: np.ndarray

    def __len__(self):
        return self.lower.shape[0]

    @property
    def volumes(self) -> np.ndarray:
        return np.prod(self.upper - self.lower, axis=1)

    def contains(self, Y) -> np.ndarray:
        """Which rows of ``Y`` fall in some cell (closed boxes)."""
        Y = np.atleast_2d(Y)
        inside = (Y[:, None, :] >= self.lower[None]) & (Y[:, None, :] <= self.upper[None])
        return inside.all(-1).any(-1)


def _points(front) -> np.ndarray:
    if isinstance(front, ParetoFront):
        return front.points
    return np.atleast_2d(np.asarray(front, dtype=float))


def _check_m(m: int):
    if m < 2:
        raise ValueError("pareto utilities need at least two objectives")
    if m > MAX_OBJECTIVES:
        raise ValueError(f"at most {MAX_OBJECTIVES} objectives are supported, got {m}")


def dominates(p, q) -> bool:
    p = np.asarray(p)
    q = np.asarray(q)
    return bool(np.all(p <= q) and np.any(p < q))


def pareto_front(Y) -> ParetoFront:
    """Non-dominated rows of ``Y`` with duplicates collapsed, sorted lexicographically."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if Y.shape[0] < 1:
        raise ValueError("pareto_front needs at least one row")
    if Y.shape[1] < 2:
        raise ValueError("pareto_front needs m >= 2; use the single-objective path")
    if not np.all(np.isfinite(Y)):
        raise ValueError("objective values must be finite")
    pts = np.unique(Y[kernels.nondominated_mask(Y)], axis=0)
    return ParetoFront(pts)


def _staircase_2d(pts: np.ndarray, reference: np.ndarray) -> float:
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]
    volume = 0.0
    best_y = reference[1]
    edges = np.append(pts[1:, 0], reference[0])
    # after sorting by f1, a running minimum of f2 skips dominated rows
    for (x, y), x_next in zip(pts, edges):
        best_y = min(best_y, y)
        volume += (x_next - x) * (reference[1] - best_y)
    return float(volume)


def _grid(pts: np.ndarray, low: np.ndarray, high: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Lower and upper corners of every grid cell spanned by ``pts`` between ``low`` and ``high``."""
    m = pts.shape[1]
    axes = [np.unique(np.concatenate([[low[j]], pts[:, j], [high[j]]])) for j in range(m)]
    axes = [a[(a >= low[j]) & (a <= high[j])] for j, a in enumerate(axes)]
    lo = np.array(list(product(*[a[:-1] for a in axes])), dtype=float).reshape(-1, m)
    hi = np.array(list(product(*[a[1:] for a in axes])), dtype=float).reshape(-1, m)
    return lo, hi


def _dominated_cells(pts: np.ndarray, lower: np.ndarray) -> np.ndarray:
    out = np.zeros(lower.shape[0], dtype=bool)
    for p in pts:
        out |= np.all(p[None, :] <= lower, axis=1)
    return out


def grid_dominated_volume(front, reference) -> float:
    """Dominated volume by summing grid cells whose lower corner is dominated."""
    pts = _points(front)
    reference = np.asarray(reference, dtype=float)
    pts = pts[np.all(pts < reference, axis=1)]
    if pts.shape[0] == 0:
        return 0.0
    lo, hi = _grid(pts, pts.min(axis=0), reference)
    mask = _dominated_cells(pts, lo)
    return float(np.prod(hi[mask] - lo[mask], axis=1).sum())


def _hv_unchecked(pts: np.ndarray, reference: np.ndarray) -> float:
    pts = pts[np.all(pts < reference, axis=1)]
    if pts.shape[0] == 0:
        return 0.0
    if pts.shape[1] == 2:
        return _staircase_2d(pts, reference)
    return grid_dominated_volume(pts, reference)


def hypervolume(front, reference) -> float:
    """Volume dominated by ``front`` and bounded above by ``reference``."""
    pts = _points(front)
    reference = np.asarray(reference, dtype=float)
    _check_m(pts.shape[1])
    if reference.shape != (pts.shape[1],):
        raise DimensionError("reference length does not match the number of objectives")
    if not np.all(pts < reference):
        raise ReferenceError("every front point must strictly dominate the reference point")
    return _hv_unchecked(pts, reference)


def cell_decomposition(front, reference, ideal) -> CellDecomposition:
    """Grid cells between ``ideal`` and ``reference`` that no front point dominates."""
    pts = _points(front)
    reference = np.asarray(reference, dtype=float)
    ideal = np.asarray(ideal, dtype=float)
    _check_m(pts.shape[1])
    if pts.shape[0] < 1:
        raise ValueError("cell_decomposition needs a non-empty front")
    if reference.shape != (pts.shape[1],) or ideal.shape != (pts.shape[1],):
        raise DimensionError("ideal/reference length does not match the number of objectives")
    if not (np.all(ideal < pts) and np.all(pts < reference)):
        raise ValueError("need ideal < every front point < reference component-wise")
    lo, hi = _grid(pts, ideal, reference)
    keep = ~_dominated_cells(pts, lo)
    return CellDecomposition(lo[keep], hi[keep], reference.copy(), ideal.copy())


def exclusive_hypervolume(candidate, front, reference) -> float:
    """Hypervolume gained by adding ``candidate`` to ``front``.

    Candidates not strictly below the reference in every objective add nothing.
    """
    candidate = np.asarray(candidate, dtype=float).ravel()
    reference = np.asarray(reference, dtype=float)
    pts = _points(front)
    if candidate.size != pts.shape[1]:
        raise DimensionError("candidate length does not match the number of objectives")
    if not np.all(candidate < reference):
        return 0.0
    pts = pts[np.all(pts < reference, axis=1)]
    if np.any(np.all(pts <= candidate, axis=1)):
        return 0.0
    base = _hv_unchecked(pts, reference)
    grown = _hv_unchecked(np.vstack([pts, candidate]), reference)
    return max(grown - base, 0.0)


def default_reference(Y, margin: float = 0.1) -> np.ndarray:
    """Anti-ideal point pushed out by ``margin`` times the observed range."""
    Y = np.atleast_2d(Y)
    hi, lo = Y.max(axis=0), Y.min(axis=0)
    return hi + margin * _span(hi, lo)


def default_ideal(Y, margin: float = 0.1) -> np.ndarray:
    Y = np.atleast_2d(Y)
    hi, lo = Y.max(axis=0), Y.min(axis=0)
    return lo - margin * _span(hi, lo)


def _span(hi, lo):
    span = hi - lo
    # a flat objective still needs a strictly separated box
    return np.where(span > 0, span, np.maximum(np.abs(hi), 1.0))
