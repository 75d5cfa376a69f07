"""Acquisition maximization: deterministic screening plus bounded local refinement."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from gpopt.design import scale_design, tplhd
from gpopt.domain import Domain
from gpopt.errors import ScoringError

ARMIJO_C = 1e-4


@dataclass(frozen=True)
class OptimizerConfig:
    n_candidates: int | None = None  # None means 200 * d
    n_refine: int = 5
    max_local_iters: int = 100
    tol: float = 1e-6
    use_gradients: bool = True

    def __post_init__(self):
        if self.n_candidates is not None and self.n_candidates < 1:
            raise ValueError("n_candidates must be positive")
        if self.n_refine < 1 or self.max_local_iters < 1 or not self.tol > 0:
            raise ValueError("n_refine, max_local_iters and tol must be positive")
        if self.n_candidates is not None and self.n_refine > self.n_candidates:
            raise ValueError("n_refine cannot exceed n_candidates")

    def candidates_for(self, d: int) -> int:
        return self.n_candidates if self.n_candidates is not None else 200 * d

    def to_dict(self) -> dict:
        return asdict(self)


def _checked(values, X) -> np.ndarray:
    values = np.asarray(values, dtype=float).reshape(-1)
    bad = np.flatnonzero(np.isnan(values))
    if bad.size:
        point = np.atleast_2d(X)[bad[0]]
        raise ScoringError(f"acquisition returned NaN at {point.tolist()}", point=point)
    return values


def _score_one(score_fn, x) -> float:
    return float(_checked(score_fn(x[None, :]), x[None, :])[0])


def _gradient_ascent(score_fn, grad_fn, x0, domain, config):
    lo, hi = domain.lower, domain.upper
    width = float(np.max(hi - lo))
    x = x0.copy()
    fx, g = grad_fn(x)
    fx = float(fx)
    if np.isnan(fx) or np.any(np.isnan(g)):
        raise ScoringError(f"acquisition returned NaN at {x.tolist()}", point=x)
    step = 0.1 * width
    for _ in range(config.max_local_iters):
        gmax = float(np.max(np.abs(g)))
        if gmax == 0.0:
            break
        moved = False
        while step >= config.tol * width * 1e-3:
            x_new = np.clip(x + (step / gmax) * g, lo, hi)
            delta = x_new - x
            if not np.any(delta):
                break
            f_new = _score_one(score_fn, x_new)
            if f_new >= fx + ARMIJO_C * float(g @ delta):
                moved = True
                break
            step *= 0.5
        if not moved:
            break
        f_new, g_new = grad_fn(x_new)
        f_new = float(f_new)
        if np.isnan(f_new) or np.any(np.isnan(g_new)):
            raise ScoringError(f"acquisition returned NaN at {x_new.tolist()}", point=x_new)
        small = float(np.max(np.abs(x_new - x))) < config.tol
        if f_new >= fx:
            x, fx, g = x_new, f_new, g_new
        step = min(2.0 * step, width)
        if small:
            break
    return x, fx


def _pattern_search(score_fn, x0, domain, config):
    lo, hi = domain.lower, domain.upper
    width = hi - lo
    d = x0.size
    x = x0.copy()
    fx = _score_one(score_fn, x)
    step = 0.1
    directions = np.vstack([np.eye(d), -np.eye(d)])
    for _ in range(config.max_local_iters):
        if step * float(np.max(width)) < config.tol:
            break
        trial = np.clip(x[None, :] + step * directions * width, lo, hi)
        values = _checked(score_fn(trial), trial)
        best = int(np.argmax(values))
        if values[best] > fx:
            x, fx = trial[best], float(values[best])
        else:
            step *= 0.5
    return x, fx


def local_search(score_fn, x0, domain: Domain, config: OptimizerConfig | None = None, grad_fn=None):
    """Refine ``x0`` inside the box; never returns a worse point.

    With ``grad_fn`` (``x -> (score, gradient)``) this is projected gradient
    ascent with Armijo backtracking, otherwise compass search.
    """
    config = config or OptimizerConfig()
    x0 = domain.clip(np.asarray(x0, dtype=float).ravel())
    if grad_fn is not None and config.use_gradients:
        return _gradient_ascent(score_fn, grad_fn, x0, domain, config)
    return _pattern_search(score_fn, x0, domain, config)


def optimize_acquisition(
    score_fn: Callable[[np.ndarray], np.ndarray],
    domain: Domain,
    config: OptimizerConfig | None = None,
    warm_starts=None,
    grad_fn=None,
) -> tuple[np.ndarray, float]:
    """Maximize a vectorized score over the domain.

    ``score_fn`` maps a ``(k, d)`` array to ``k`` scores. Candidates are a
    TPLHD screening design plus ``warm_starts``; the best ``n_refine`` are
    refined and the best refined point wins (lowest candidate index on ties).
    """
    config = config or OptimizerConfig()
    d = domain.dimension
    candidates = scale_design(tplhd(config.candidates_for(d), d), domain)
    if warm_starts is not None and len(warm_starts):
        candidates = np.vstack([candidates, domain.clip(np.atleast_2d(warm_starts))])
    values = _checked(score_fn(candidates), candidates)
    order = np.lexsort((np.arange(values.size), -values))[: config.n_refine]
    best_x, best_f = candidates[order[0]].copy(), float(values[order[0]])
    for idx in order:
        x, f = local_search(score_fn, candidates[idx], domain, config, grad_fn)
        if f > best_f:
            best_x, best_f = x, f
    return best_x, best_f
