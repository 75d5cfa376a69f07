"""Acquisition functions: closed-form scores of Gaussian predictive distributions.

Objectives are minimized and every acquisition is maximized. Scalar scores
broadcast over arrays of query points. Where ``sigma`` drops below
``SIGMA_FLOOR`` the deterministic limit of each formula is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import log_ndtr, ndtr
from scipy.stats import qmc

from gpopt.errors import ConfigurationError, DimensionError, SamplingError
from gpopt.pareto import CellDecomposition, ParetoFront

SIGMA_FLOOR = 1e-10
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

KINDS = ("EI", "PoI", "LCB", "MES", "HvPoI", "PoF")
_KIND_LOOKUP = {k.lower(): k for k in KINDS}
SINGLE_OBJECTIVE_KINDS = ("EI", "PoI", "LCB", "MES")


def normal_pdf(z):
    return _INV_SQRT_2PI * np.exp(-0.5 * np.square(z))


def _split(var):
    var = np.asarray(var, dtype=float)
    sigma = np.sqrt(np.maximum(var, 0.0))
    tiny = sigma < SIGMA_FLOOR
    return sigma, tiny, np.where(tiny, 1.0, sigma)


@dataclass(frozen=True)
class AcquisitionSpec:
    kind: str = "EI"
    beta: float = 2.0
    mes_samples: int = 10
    mes_grid_size: int = 500
    pof_threshold: float = 0.0
    reference: tuple[float, ...] | None = None
    ideal: tuple[float, ...] | None = None

    def __post_init__(self):
        kind = _KIND_LOOKUP.get(str(self.kind).lower())
        if kind is None:
            raise ConfigurationError(f"unknown acquisition {self.kind!r}; choose from {', '.join(KINDS)}")
        object.__setattr__(self, "kind", kind)
        if self.beta < 0:
            raise ConfigurationError("beta must be non-negative")
        if self.mes_samples < 1 or self.mes_grid_size < 1:
            raise ConfigurationError("mes_samples and mes_grid_size must be positive")
        for name in ("reference", "ideal"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, tuple(float(v) for v in value))

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "LCB":
            out["beta"] = self.beta
        if self.kind == "MES":
            out["mes_samples"] = self.mes_samples
            out["mes_grid_size"] = self.mes_grid_size
        if self.kind == "HvPoI":
            out["reference"] = None if self.reference is None else list(self.reference)
            out["ideal"] = None if self.ideal is None else list(self.ideal)
        out["pof_threshold"] = self.pof_threshold
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "AcquisitionSpec":
        known = {"kind", "beta", "mes_samples", "mes_grid_size", "pof_threshold", "reference", "ideal"}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown acquisition keys: {sorted(unknown)}")
        return cls(**data)


# --- single-objective closed forms -------------------------------------------


def expected_improvement(mu, var, f_best):
    mu = np.asarray(mu, dtype=float)
    sigma, tiny, s = _split(var)
    gap = f_best - mu
    z = gap / s
    ei = gap * ndtr(z) + s * normal_pdf(z)
    return np.where(tiny, np.maximum(gap, 0.0), np.maximum(ei, 0.0))


def expected_improvement_grad(mu, var, f_best):
    """(dEI/dmu, dEI/dvar)."""
    mu = np.asarray(mu, dtype=float)
    sigma, tiny, s = _split(var)
    z = (f_best - mu) / s
    dmu = np.where(tiny, -(mu < f_best).astype(float), -ndtr(z))
    dvar = np.where(tiny, 0.0, normal_pdf(z) / (2.0 * s))
    return dmu, dvar


def probability_of_improvement(mu, var, f_best):
    mu = np.asarray(mu, dtype=float)
    sigma, tiny, s = _split(var)
    return np.where(tiny, (mu < f_best).astype(float), ndtr((f_best - mu) / s))


def probability_of_improvement_grad(mu, var, f_best):
    mu = np.asarray(mu, dtype=float)
    sigma, tiny, s = _split(var)
    z = (f_best - mu) / s
    pdf = normal_pdf(z)
    dmu = np.where(tiny, 0.0, -pdf / s)
    dvar = np.where(tiny, 0.0, -pdf * z / (2.0 * s * s))
    return dmu, dvar


def lower_confidence_bound(mu, var, beta=2.0):
    """Negated lower confidence bound ``-(mu - beta * sigma)``."""
    mu = np.asarray(mu, dtype=float)
    sigma = np.sqrt(np.maximum(np.asarray(var, dtype=float), 0.0))
    return -(mu - beta * sigma)


def lower_confidence_bound_grad(mu, var, beta=2.0):
    mu = np.asarray(mu, dtype=float)
    sigma, tiny, s = _split(var)
    return -np.ones_like(mu), np.where(tiny, 0.0, beta / (2.0 * s))


def probability_of_feasibility(mu_c, var_c, threshold=0.0):
    """Probability that a constraint with this predictive Gaussian is <= threshold."""
    mu_c = np.asarray(mu_c, dtype=float)
    sigma, tiny, s = _split(var_c)
    return np.where(tiny, (mu_c <= threshold).astype(float), ndtr((threshold - mu_c) / s))


def probability_of_feasibility_grad(mu_c, var_c, threshold=0.0):
    return probability_of_improvement_grad(mu_c, var_c, threshold)


def joint_acquisition(objective_score, pof_scores: Sequence = ()):
    """Objective score times every probability of feasibility."""
    out = np.asarray(objective_score, dtype=float)
    for pof in pof_scores:
        out = out * np.asarray(pof, dtype=float)
    return out


# --- max-value entropy search ------------------------------------------------


def max_value_log_cdf(y, mu_g, sigma) -> float:
    """log P(max_i g_i <= y) for independent Gaussians g_i ~ N(mu_g_i, sigma_i^2)."""
    s = np.maximum(sigma, SIGMA_FLOOR)
    return float(log_ndtr((y - mu_g) / s).sum())


def _bisect_quantile(q, mu_g, sigma, lo, hi, iters=200):
    target = math.log(q)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if max_value_log_cdf(mid, mu_g, sigma) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class GumbelFit:
    location: float
    scale: float
    quantiles: dict = field(default_factory=dict)

    def cdf(self, y):
        return np.exp(-np.exp(-(np.asarray(y) - self.location) / self.scale))

    def sample(self, k: int, rng) -> np.ndarray:
        r = rng.uniform(size=k)
        return self.location - self.scale * np.log(-np.log(r))


def fit_gumbel(mu_g, sigma) -> GumbelFit:
    """Gumbel approximation of the distribution of ``max_i g_i``.

    Quartiles and median of the exact product-of-CDFs are found by bisection
    and matched to a Gumbel law.
    """
    mu_g = np.asarray(mu_g, dtype=float).ravel()
    sigma = np.asarray(sigma, dtype=float).ravel()
    if not np.any(sigma >= SIGMA_FLOOR):
        raise SamplingError("every predictive standard deviation is zero; cannot fit a max-value law")
    spread = float(sigma.max())
    lo = float(mu_g.max()) - 5.0 * spread
    hi = float((mu_g + 5.0 * sigma).max())
    while max_value_log_cdf(lo, mu_g, sigma) > math.log(0.2):
        lo -= spread
    while max_value_log_cdf(hi, mu_g, sigma) < math.log(0.8):
        hi += spread
    quantiles = {q: _bisect_quantile(q, mu_g, sigma, lo, hi) for q in (0.25, 0.5, 0.75)}
    scale = (quantiles[0.75] - quantiles[0.25]) / (
        math.log(math.log(4.0)) - math.log(math.log(4.0 / 3.0))
    )
    scale = max(scale, SIGMA_FLOOR)
    location = quantiles[0.5] + scale * math.log(math.log(2.0))
    return GumbelFit(location, scale, quantiles)


def sample_min_values(model, domain, K=10, grid_size=500, rng=None, return_fit=False):
    """Samples of the minimum of ``f``, returned on the ``g = -f`` scale.

    ``model.predict`` is evaluated at ``grid_size`` scrambled Halton points of
    ``domain`` plus the model's training inputs (``model.X``) when present.
    """
    rng = np.random.default_rng(rng)
    halton = qmc.Halton(d=domain.dimension, scramble=True, seed=rng)
    points = domain.from_unit(halton.random(grid_size))
    train = getattr(model, "X", None)
    if train is not None:
        points = np.vstack([points, np.asarray(train, dtype=float)])
    mu, var = model.predict(points)
    fit = fit_gumbel(-np.asarray(mu), np.sqrt(np.maximum(var, 0.0)))
    samples = fit.sample(K, rng)
    return (samples, fit) if return_fit else samples


def mes_terms(gamma):
    """Per-sample information gain ``g*pdf(g)/(2*cdf(g)) - log cdf(g)``."""
    gamma = np.asarray(gamma, dtype=float)
    log_cdf = log_ndtr(gamma)
    ratio = np.exp(-0.5 * gamma * gamma - 0.5 * math.log(2.0 * math.pi) - log_cdf)
    # exact value is non-negative; rounding can leave ~-1e-17
    return np.maximum(gamma * ratio / 2.0 - log_cdf, 0.0)


def mes(mu, var, min_value_samples):
    """Max-value entropy search; ``min_value_samples`` come from :func:`sample_min_values`."""
    mu = np.asarray(mu, dtype=float)
    sigma, tiny, s = _split(var)
    ystar = np.asarray(min_value_samples, dtype=float).ravel()
    gamma = (ystar[None, :] - (-mu.reshape(-1, 1))) / s.reshape(-1, 1)
    score = mes_terms(gamma).mean(axis=1)
    score = np.where(tiny.reshape(-1), 0.0, score)
    return score.reshape(mu.shape)


# --- hypervolume probability of improvement ----------------------------------


def hvpoi_probability(means, variances, decomposition: CellDecomposition):
    """Probability that the outcome lands in a non-dominated cell."""
    means = np.atleast_2d(np.asarray(means, dtype=float))
    variances = np.atleast_2d(np.asarray(variances, dtype=float))
    sigma, tiny, s = _split(variances)
    mu = means[:, None, :]
    ss = s[:, None, :]
    tt = tiny[:, None, :]
    upper = decomposition.upper[None]
    lower = decomposition.lower[None]
    cdf_u = np.where(tt, (mu <= upper).astype(float), ndtr((upper - mu) / ss))
    cdf_l = np.where(tt, (mu <= lower).astype(float), ndtr((lower - mu) / ss))
    return np.clip(np.prod(cdf_u - cdf_l, axis=2).sum(axis=1), 0.0, 1.0)


def exclusive_volume_in_cells(points, decomposition: CellDecomposition):
    """Exclusive hypervolume of each row, via its overlap with the non-dominated cells.

    Equals :func:`gpopt.pareto.exclusive_hypervolume` for points inside
    ``[ideal, reference]``.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    low = np.maximum(decomposition.lower[None], points[:, None, :])
    extent = np.clip(decomposition.upper[None] - low, 0.0, None)
    return np.prod(extent, axis=2).sum(axis=1)


def hvpoi(candidate_means, candidate_variances, front: ParetoFront, decomposition: CellDecomposition):
    """Hypervolume-based probability of improvement.

    Exclusive hypervolume of the predicted mean (clamped into the
    ideal/reference box) times the probability of landing in a
    non-dominated cell. Accepts one candidate (shape ``(m,)``) or a batch.
    """
    means = np.asarray(candidate_means, dtype=float)
    single = means.ndim == 1
    means = np.atleast_2d(means)
    variances = np.atleast_2d(np.asarray(candidate_variances, dtype=float))
    m = decomposition.lower.shape[1]
    if means.shape[1] != m or variances.shape != means.shape or front.m != m:
        raise DimensionError("candidate objective count does not match the front")
    clamped = np.clip(means, decomposition.ideal, decomposition.reference)
    score = exclusive_volume_in_cells(clamped, decomposition) * hvpoi_probability(
        means, variances, decomposition
    )
    return float(score[0]) if single else score


# --- hyperparameter marginalization ------------------------------------------


def marginalized_acquisition(evaluate: Callable, samples: Sequence, x):
    """Mean of ``evaluate(sample, x)`` over hyperparameter samples."""
    samples = list(samples)
    if not samples:
        raise ValueError("marginalized_acquisition needs at least one hyperparameter sample")
    total = None
    for sample in samples:
        value = np.asarray(evaluate(sample, x), dtype=float)
        total = value if total is None else total + value
    return total / len(samples)


# --- scores over the input space ---------------------------------------------


class ModelAcquisition:
    """An acquisition evaluated through fitted surrogate models.

    Models need ``predict(U) -> (mean, var)`` and, for the gradient path,
    ``predict_gradient(u) -> (dmean, dvar)``. Single-objective kinds read
    ``objective_models[0]``; HvPoI reads all of them. Each constraint model
    multiplies the score by its probability of feasibility. With
    ``feasibility_only`` the objective factor is 1, which is how the search
    proceeds before any feasible observation exists.
    """

    def __init__(
        self,
        spec: AcquisitionSpec,
        objective_models=(),
        constraint_models=(),
        f_best: float | None = None,
        min_values=None,
        front: ParetoFront | None = None,
        decomposition: CellDecomposition | None = None,
        feasibility_only: bool = False,
    ):
        self.spec = spec
        self.objective_models = list(objective_models)
        self.constraint_models = list(constraint_models)
        self.f_best = f_best
        self.min_values = min_values
        self.front = front
        self.decomposition = decomposition
        self.feasibility_only = feasibility_only or spec.kind == "PoF"
        kind = spec.kind
        if not self.feasibility_only:
            if kind in ("EI", "PoI") and f_best is None:
                raise ConfigurationError(f"{kind} needs an incumbent value")
            if kind == "MES" and min_values is None:
                raise ConfigurationError("MES needs sampled min-values")
            if kind == "HvPoI" and (front is None or decomposition is None):
                raise ConfigurationError("HvPoI needs a front and its cell decomposition")
        if self.feasibility_only and not self.constraint_models:
            raise ConfigurationError("a feasibility-only acquisition needs constraint models")

    @property
    def has_gradient(self) -> bool:
        return self.feasibility_only or self.spec.kind in ("EI", "PoI", "LCB")

    def _objective(self, U):
        kind = self.spec.kind
        if self.feasibility_only:
            return np.ones(U.shape[0])
        if kind == "HvPoI":
            preds = [m.predict(U) for m in self.objective_models]
            means = np.column_stack([p[0] for p in preds])
            variances = np.column_stack([p[1] for p in preds])
            return hvpoi(means, variances, self.front, self.decomposition)
        mu, var = self.objective_models[0].predict(U)
        if kind == "EI":
            return expected_improvement(mu, var, self.f_best)
        if kind == "PoI":
            return probability_of_improvement(mu, var, self.f_best)
        if kind == "LCB":
            return lower_confidence_bound(mu, var, self.spec.beta)
        return mes(mu, var, self.min_values)

    def __call__(self, U) -> np.ndarray:
        U = np.atleast_2d(np.asarray(U, dtype=float))
        score = self._objective(U)
        pofs = []
        for model in self.constraint_models:
            mu_c, var_c = model.predict(U)
            pofs.append(probability_of_feasibility(mu_c, var_c, self.spec.pof_threshold))
        return joint_acquisition(score, pofs)

    def value_and_grad(self, u) -> tuple[float, np.ndarray]:
        if not self.has_gradient:
            raise NotImplementedError(f"no analytic gradient for {self.spec.kind}")
        u = np.asarray(u, dtype=float).ravel()
        factors = []
        if not self.feasibility_only:
            model = self.objective_models[0]
            mu, var = model.predict(u[None, :])
            dmu_dx, dvar_dx = model.predict_gradient(u)
            kind = self.spec.kind
            if kind == "EI":
                value = expected_improvement(mu, var, self.f_best)[0]
                gm, gv = expected_improvement_grad(mu, var, self.f_best)
            elif kind == "PoI":
                value = probability_of_improvement(mu, var, self.f_best)[0]
                gm, gv = probability_of_improvement_grad(mu, var, self.f_best)
            else:
                value = lower_confidence_bound(mu, var, self.spec.beta)[0]
                gm, gv = lower_confidence_bound_grad(mu, var, self.spec.beta)
            factors.append((float(value), gm[0] * dmu_dx + gv[0] * dvar_dx))
        t = self.spec.pof_threshold
        for model in self.constraint_models:
            mu, var = model.predict(u[None, :])
            dmu_dx, dvar_dx = model.predict_gradient(u)
            gm, gv = probability_of_feasibility_grad(mu, var, t)
            factors.append(
                (float(probability_of_feasibility(mu, var, t)[0]), gm[0] * dmu_dx + gv[0] * dvar_dx)
            )
        value = 1.0
        grad = np.zeros_like(u)
        for v, g in factors:
            grad = grad * v + value * g
            value *= v
        return value, grad


class MarginalizedAcquisition:
    """Mean of several acquisitions, one per hyperparameter sample."""

    def __init__(self, members):
        self.members = list(members)
        if not self.members:
            raise ValueError("need at least one member acquisition")

    @property
    def has_gradient(self) -> bool:
        return all(m.has_gradient for m in self.members)

    def __call__(self, U):
        return marginalized_acquisition(lambda member, x: member(x), self.members, U)

    def value_and_grad(self, u):
        parts = [m.value_and_grad(u) for m in self.members]
        return float(np.mean([p[0] for p in parts])), np.mean([p[1] for p in parts], axis=0)
