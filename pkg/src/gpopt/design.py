"""Latin hypercube designs: translational propagation (maximin) and random baselines.

Designs are integer level matrices with entries in ``1..n``; ``scale_design``
maps them into a :class:`~gpopt.domain.Domain`.
"""

from __future__ import annotations

import numpy as np

from gpopt._backend import kernels
from gpopt.domain import Domain
from gpopt.errors import DimensionError


def _ceil_root(n: int, p: int) -> int:
    """Smallest integer k with k**p >= n (exact integer arithmetic)."""
    k = max(1, int(round(n ** (1.0 / p))))
    while k**p < n:
        k += 1
    while k > 1 and (k - 1) ** p >= n:
        k -= 1
    return k


def _check_args(n, p):
    if int(n) != n or int(p) != p or n < 1 or p < 1:
        raise ValueError(f"n and p must be positive integers, got n={n}, p={p}")
    return int(n), int(p)


def _rerank_columns(levels: np.ndarray) -> np.ndarray:
    order = np.argsort(levels, axis=0, kind="stable")
    ranks = np.empty_like(levels)
    rows = np.arange(1, levels.shape[0] + 1)
    for j in range(levels.shape[1]):
        ranks[order[:, j], j] = rows
    return ranks


def propagated_levels(nd: int, p: int) -> np.ndarray:
    """Full nd**p-point block grown from the seed (1, ..., 1).

    Point ``m`` with base-``nd`` digits ``a_j`` gets level
    ``1 + sum_j a_j * nd**((j - d) mod p)`` in dimension ``d``; each column is
    a permutation of ``1..nd**p``.
    """
    N = nd**p
    m = np.arange(N, dtype=np.int64)
    digits = np.empty((N, p), dtype=np.int64)
    rest = m.copy()
    for j in range(p):
        digits[:, j] = rest % nd
        rest //= nd
    levels = np.empty((N, p), dtype=np.int64)
    for d in range(p):
        weights = np.array([nd ** ((j - d) % p) for j in range(p)], dtype=np.int64)
        levels[:, d] = 1 + digits @ weights
    return levels


def _center_order(levels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    N = levels.shape[0]
    center = (N + 1) / 2.0
    dist2 = ((levels - center) ** 2).sum(axis=1)
    return np.lexsort((np.arange(N), dist2)), dist2


def _trim_by_index(levels: np.ndarray, n: int) -> np.ndarray:
    order, _ = _center_order(levels)
    return np.sort(order[:n])


def _trim_by_spread(levels: np.ndarray, n: int) -> np.ndarray:
    """Center trim that fills the boundary shell greedily by maximin distance."""
    order, dist2 = _center_order(levels)
    cutoff = dist2[order[n - 1]]
    keep = [int(i) for i in order if dist2[i] < cutoff]
    shell = np.array([i for i in order if dist2[i] == cutoff])
    pts = levels.astype(float)
    if keep:
        diff = pts[shell][:, None, :] - pts[keep][None, :, :]
        nearest = (diff * diff).sum(-1).min(axis=1)
    else:
        nearest = np.full(shell.size, np.inf)
    taken = np.zeros(shell.size, dtype=bool)
    while len(keep) < n:
        # argmax returns the first (lowest-index) shell point among equals
        score = np.where(taken, -1.0, nearest)
        pick = int(np.argmax(score))
        taken[pick] = True
        chosen = shell[pick]
        keep.append(int(chosen))
        step = ((pts[shell] - pts[chosen]) ** 2).sum(-1)
        nearest = np.minimum(nearest, step)
    return np.sort(np.array(keep))


def tplhd(n: int, p: int) -> np.ndarray:
    """Maximin Latin hypercube of ``n`` points in ``p`` dimensions.

    Built by translational propagation of a one-point seed over an
    ``nd**p`` block with ``nd = ceil(n**(1/p))``. Surplus points are trimmed
    by keeping the ``n`` closest to the block center (ties to the lower
    index), then each column is re-ranked to ``1..n``.

    When many block points sit at the cutoff distance the index rule can keep
    a clustered subset, so a second trim that fills the cutoff shell greedily
    by maximin distance is also built; it replaces the first only if its
    minimum distance is strictly larger. Deterministic.
    """
    n, p = _check_args(n, p)
    nd = _ceil_root(n, p)
    levels = propagated_levels(nd, p)
    if levels.shape[0] == n:
        return levels
    design = _rerank_columns(levels[_trim_by_index(levels, n)])
    if n >= 2:
        alt = _rerank_columns(levels[_trim_by_spread(levels, n)])
        if min_distance(alt) > min_distance(design):
            design = alt
    return design


def random_lhs(n: int, p: int, rng: np.random.Generator | int | None = None) -> np.ndarray:
    """Latin hypercube with independent uniformly random column permutations."""
    n, p = _check_args(n, p)
    rng = np.random.default_rng(rng)
    return np.column_stack([rng.permutation(n) + 1 for _ in range(p)]).astype(np.int64)


def is_latin(levels: np.ndarray) -> bool:
    levels = np.asarray(levels)
    n = levels.shape[0]
    expected = np.arange(1, n + 1)
    return all(np.array_equal(np.sort(levels[:, j]), expected) for j in range(levels.shape[1]))


def min_distance(levels: np.ndarray) -> float:
    """Smallest pairwise Euclidean distance between design rows."""
    levels = np.asarray(levels, dtype=float)
    if levels.ndim != 2 or levels.shape[0] < 2:
        raise ValueError("min_distance needs at least two points")
    return float(kernels.min_pairwise_distance(levels))


def design_to_unit(levels: np.ndarray) -> np.ndarray:
    """Levels to [0, 1]: ``(l - 1) / (n - 1)``, or 0.5 for a single point."""
    levels = np.asarray(levels, dtype=float)
    n = levels.shape[0]
    if n == 1:
        return np.full_like(levels, 0.5)
    return (levels - 1.0) / (n - 1.0)


def scale_design(levels: np.ndarray, domain: Domain) -> np.ndarray:
    levels = np.asarray(levels)
    if levels.ndim != 2 or levels.shape[1] != domain.dimension:
        raise DimensionError(
            f"design has shape {levels.shape}, domain dimension is {domain.dimension}"
        )
    return domain.from_unit(design_to_unit(levels))
