"""Exact Gaussian-process regression with analytic gradients.

Hyperparameters live in log space as one flat vector
``[log signal_variance, log lengthscale_1..d, log noise_variance]``.
Inputs are expected on the unit cube and targets normalized; the default
bounds below assume that scaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.optimize import minimize

from gpopt._backend import kernels
from gpopt.errors import DataError, DimensionError, InitializationError, NotPositiveDefiniteError

FAMILIES = {
    "se": 0,
    "squaredexponential": 0,
    "squared_exponential": 0,
    "matern52": 1,
}

LENGTHSCALE_BOUNDS = (1e-3, 1e3)
SIGNAL_VARIANCE_BOUNDS = (1e-6, 1e4)
NOISE_VARIANCE_BOUNDS = (1e-8, 1e2)
DEFAULT_LENGTHSCALE = 0.5
DEFAULT_SIGNAL_VARIANCE = 1.0
DEFAULT_NOISE_VARIANCE = 1e-3

JITTER_START = 1e-8
JITTER_CEILING = 1e-2
_LOG_2PI = math.log(2.0 * math.pi)


def family_code(family: str) -> int:
    try:
        return FAMILIES[family.lower()]
    except KeyError:
        raise ValueError(f"unknown kernel family {family!r}; use 'se' or 'matern52'") from None


def canonical_family(family: str) -> str:
    return "se" if family_code(family) == 0 else "matern52"


@dataclass(frozen=True)
class Kernel:
    """Stationary ARD kernel (squared exponential or Matern 5/2)."""

    family: str
    signal_variance: float
    lengthscales: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "family", canonical_family(self.family))
        ls = tuple(float(v) for v in np.atleast_1d(self.lengthscales))
        object.__setattr__(self, "lengthscales", ls)
        if not self.signal_variance > 0 or not all(v > 0 for v in ls):
            raise ValueError("kernel parameters must be strictly positive")

    @property
    def dimension(self) -> int:
        return len(self.lengthscales)

    @property
    def code(self) -> int:
        return family_code(self.family)

    def matrix(self, X1, X2) -> np.ndarray:
        X1 = np.atleast_2d(np.asarray(X1, dtype=float))
        X2 = np.atleast_2d(np.asarray(X2, dtype=float))
        if X1.shape[1] != self.dimension or X2.shape[1] != self.dimension:
            raise DimensionError(
                f"kernel has dimension {self.dimension}, got inputs {X1.shape} and {X2.shape}"
            )
        return kernels.kernel_matrix(
            X1, X2, np.asarray(self.lengthscales), float(self.signal_variance), self.code
        )


def kernel_eval(kernel: Kernel, x, x_prime) -> float:
    x = np.asarray(x, dtype=float).ravel()
    x_prime = np.asarray(x_prime, dtype=float).ravel()
    if x.size != kernel.dimension or x_prime.size != kernel.dimension:
        raise DimensionError("kernel_eval: point length does not match kernel dimension")
    return float(kernel.matrix(x[None, :], x_prime[None, :])[0, 0])


def pack(kernel: Kernel, noise_variance: float) -> np.ndarray:
    return np.concatenate(
        [[math.log(kernel.signal_variance)], np.log(kernel.lengthscales), [math.log(noise_variance)]]
    )


def unpack(theta, family: str) -> tuple[Kernel, float]:
    theta = np.asarray(theta, dtype=float)
    kernel = Kernel(family, float(np.exp(theta[0])), tuple(np.exp(theta[1:-1])))
    return kernel, float(np.exp(theta[-1]))


def log_bounds(d: int) -> list[tuple[float, float]]:
    lo_ls, hi_ls = LENGTHSCALE_BOUNDS
    return (
        [tuple(np.log(SIGNAL_VARIANCE_BOUNDS))]
        + [(math.log(lo_ls), math.log(hi_ls))] * d
        + [tuple(np.log(NOISE_VARIANCE_BOUNDS))]
    )


def default_theta(d: int) -> np.ndarray:
    return pack(Kernel("se", DEFAULT_SIGNAL_VARIANCE, (DEFAULT_LENGTHSCALE,) * d), DEFAULT_NOISE_VARIANCE)


def _cholesky_with_jitter(K: np.ndarray) -> tuple[np.ndarray, float]:
    n = K.shape[0]
    scale = float(np.mean(np.diag(K)))
    if not scale > 0:
        scale = 1.0
    # pivots below this are numerically indistinguishable from zero
    floor = n * np.finfo(float).eps * float(np.max(np.diag(K)))
    jitter = 0.0
    while True:
        try:
            L = np.linalg.cholesky(K + jitter * np.eye(n) if jitter else K)
            if np.all(np.diag(L) ** 2 > floor):
                return L, jitter
        except np.linalg.LinAlgError:
            pass
        jitter = JITTER_START * scale if jitter == 0.0 else jitter * 10.0
        if jitter > JITTER_CEILING * scale * (1 + 1e-9):
            raise NotPositiveDefiniteError(
                f"covariance not positive definite with jitter up to {JITTER_CEILING:g} x mean diagonal"
            )


@dataclass(frozen=True, eq=False)
class GPModel:
    """A fitted exact GP. Build with :func:`fit`; never mutated afterwards."""

    X: np.ndarray
    y: np.ndarray
    kernel: Kernel
    noise_variance: float
    chol: np.ndarray
    alpha: np.ndarray
    jitter: float = 0.0

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dimension(self) -> int:
        return self.X.shape[1]

    @property
    def theta(self) -> np.ndarray:
        return pack(self.kernel, self.noise_variance)

    def covariance(self) -> np.ndarray:
        """The factorized matrix ``K_ff + (noise + jitter) I``."""
        K = self.kernel.matrix(self.X, self.X)
        K[np.diag_indices_from(K)] += self.noise_variance + self.jitter
        return K

    def _check_query(self, Xq) -> np.ndarray:
        Xq = np.asarray(Xq, dtype=float)
        if Xq.ndim == 1:
            Xq = Xq[None, :]
        if Xq.shape[1] != self.dimension:
            raise DimensionError(f"query has {Xq.shape[1]} columns, model expects {self.dimension}")
        return Xq

    def predict(self, Xq, include_noise: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """Predictive mean and variance at the rows of ``Xq``."""
        Xq = self._check_query(Xq)
        Kqf = self.kernel.matrix(Xq, self.X)
        mean = Kqf @ self.alpha
        v = solve_triangular(self.chol, Kqf.T, lower=True, check_finite=False)
        var = self.kernel.signal_variance - np.einsum("ij,ij->j", v, v)
        var = np.maximum(var, 0.0)
        if include_noise:
            var = var + self.noise_variance
        return mean, var

    def predict_gradient(self, x) -> tuple[np.ndarray, np.ndarray]:
        """Gradients of the latent predictive mean and variance at one point."""
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.dimension:
            raise DimensionError(f"point has length {x.size}, model expects {self.dimension}")
        ls = np.asarray(self.kernel.lengthscales)
        G = kernels.kernel_x_grad(x, self.X, ls, self.kernel.signal_variance, self.kernel.code)
        kq = self.kernel.matrix(x[None, :], self.X)[0]
        w = cho_solve((self.chol, True), kq, check_finite=False)
        return G.T @ self.alpha, -2.0 * (G.T @ w)

    def log_marginal_likelihood(self) -> float:
        return float(
            -0.5 * self.y @ self.alpha
            - np.log(np.diag(self.chol)).sum()
            - 0.5 * self.n * _LOG_2PI
        )

    def lml_gradient(self) -> np.ndarray:
        """d LML / d theta for theta = [log sf2, log l_1..d, log sn2]."""
        Kinv = cho_solve((self.chol, True), np.eye(self.n), check_finite=False)
        W = np.outer(self.alpha, self.alpha) - Kinv
        Kff = self.kernel.matrix(self.X, self.X)
        ls = np.asarray(self.kernel.lengthscales)
        grad = np.empty(self.dimension + 2)
        grad[0] = 0.5 * np.sum(W * Kff)
        grad[1:-1] = 0.5 * kernels.lengthscale_traces(
            self.X, W, ls, self.kernel.signal_variance, self.kernel.code
        )
        grad[-1] = 0.5 * np.trace(W) * self.noise_variance
        return grad


def _as_data(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.size:
        raise DimensionError(f"X has {X.shape[0]} rows but y has {y.size} values")
    if X.shape[0] < 1:
        raise DataError("at least one training point is required")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DataError("training data contains NaN or inf")
    return X, y


def fit(X, y, kernel: Kernel, noise_variance: float) -> GPModel:
    """Factorize the training covariance and cache ``K^-1 y``."""
    X, y = _as_data(X, y)
    if X.shape[1] != kernel.dimension:
        raise DimensionError(f"X has {X.shape[1]} columns, kernel dimension is {kernel.dimension}")
    if noise_variance < 0 or not np.isfinite(noise_variance):
        raise ValueError("noise_variance must be finite and non-negative")
    K = kernel.matrix(X, X)
    K[np.diag_indices_from(K)] += noise_variance
    L, jitter = _cholesky_with_jitter(K)
    alpha = cho_solve((L, True), y, check_finite=False)
    X = X.copy()
    y = y.copy()
    for arr in (X, y, L, alpha):
        arr.flags.writeable = False
    return GPModel(X, y, kernel, float(noise_variance), L, alpha, jitter)


def fit_theta(X, y, theta, family: str) -> GPModel:
    kernel, noise = unpack(theta, family)
    return fit(X, y, kernel, noise)


def _neg_lml(theta, X, y, family):
    try:
        model = fit_theta(X, y, theta, family)
    except NotPositiveDefiniteError:
        return 1e25, np.zeros_like(theta)
    return -model.log_marginal_likelihood(), -model.lml_gradient()


def optimize_hyperparameters(
    X,
    y,
    family: str = "matern52",
    restarts: int = 3,
    rng: np.random.Generator | int | None = None,
    maxiter: int = 200,
) -> GPModel:
    """Maximize the log marginal likelihood with bounded L-BFGS-B restarts.

    The first start is the fixed heuristic point; the remaining ``restarts - 1``
    are drawn log-uniformly inside the bounds. Returns the best fit found
    (first one wins on exact ties).
    """
    X, y = _as_data(X, y)
    d = X.shape[1]
    family = canonical_family(family)
    theta0 = default_theta(d)
    if X.shape[0] == 1:
        return fit_theta(X, y, theta0, family)
    rng = np.random.default_rng(rng)
    bounds = log_bounds(d)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    starts = [theta0] + [rng.uniform(lo, hi) for _ in range(max(restarts, 1) - 1)]

    best, best_lml = None, -np.inf
    for start in starts:
        res = minimize(
            _neg_lml,
            start,
            args=(X, y, family),
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            options={"maxiter": maxiter, "ftol": 1e-12, "gtol": 1e-7},
        )
        theta = np.clip(res.x, lo, hi)
        try:
            model = fit_theta(X, y, theta, family)
        except NotPositiveDefiniteError:
            continue
        lml = model.log_marginal_likelihood()
        if np.isfinite(lml) and lml > best_lml:
            best, best_lml = model, lml
    if best is None:
        raise NotPositiveDefiniteError("every hyperparameter restart failed to factorize")
    return best


# --- Hamiltonian Monte Carlo -------------------------------------------------


@dataclass(frozen=True)
class HyperparameterSample:
    log_signal_variance: float
    log_lengthscales: tuple[float, ...]
    log_noise_variance: float

    @classmethod
    def from_theta(cls, theta) -> "HyperparameterSample":
        theta = np.asarray(theta, dtype=float)
        return cls(float(theta[0]), tuple(float(v) for v in theta[1:-1]), float(theta[-1]))

    @property
    def theta(self) -> np.ndarray:
        return np.concatenate([[self.log_signal_variance], self.log_lengthscales, [self.log_noise_variance]])

    def fit(self, X, y, family: str) -> GPModel:
        return fit_theta(X, y, self.theta, family)


@dataclass
class HMCResult:
    samples: np.ndarray
    acceptance_rate: float
    energy_errors: np.ndarray


LogDensity = Callable[[np.ndarray], "tuple[float, np.ndarray]"]


def standard_normal_log_density(theta) -> tuple[float, np.ndarray]:
    """Unnormalized standard normal; a target with known moments for testing."""
    theta = np.asarray(theta, dtype=float)
    return -0.5 * float(theta @ theta), -theta


def hmc(
    log_density: LogDensity,
    theta0,
    n_samples: int,
    step_size: float,
    leapfrog_steps: int,
    burn_in: int = 0,
    thin: int = 1,
    rng: np.random.Generator | int | None = None,
) -> HMCResult:
    """Leapfrog HMC with identity mass matrix and Metropolis correction.

    ``log_density`` returns ``(log p, grad log p)``. Trajectories that reach a
    non-finite density are rejected.
    """
    if not step_size > 0:
        raise ValueError("step_size must be positive")
    if leapfrog_steps < 1 or n_samples < 1 or thin < 1 or burn_in < 0:
        raise ValueError("leapfrog_steps, n_samples and thin must be >= 1, burn_in >= 0")
    rng = np.random.default_rng(rng)
    theta = np.array(theta0, dtype=float)
    logp, grad = log_density(theta)
    if not (np.isfinite(logp) and np.all(np.isfinite(grad))):
        raise InitializationError("log density is not finite at the initial state")

    total = burn_in + n_samples * thin
    kept = np.empty((n_samples, theta.size))
    energy_errors = np.empty(total)
    accepted = 0
    k = 0
    for it in range(total):
        p0 = rng.standard_normal(theta.size)
        q, p, lq, gq = theta.copy(), p0.copy(), logp, grad
        p = p + 0.5 * step_size * gq
        ok = True
        for step in range(leapfrog_steps):
            q = q + step_size * p
            lq, gq = log_density(q)
            if not (np.isfinite(lq) and np.all(np.isfinite(gq))):
                ok = False
                break
            if step < leapfrog_steps - 1:
                p = p + step_size * gq
        if ok:
            p = p + 0.5 * step_size * gq
            h0 = -logp + 0.5 * p0 @ p0
            h1 = -lq + 0.5 * p @ p
            dh = h1 - h0
            energy_errors[it] = dh
            if np.log(rng.uniform()) < -dh:
                theta, logp, grad = q, lq, gq
                accepted += 1
        else:
            energy_errors[it] = np.inf
            rng.uniform()
        if it >= burn_in and (it - burn_in) % thin == thin - 1:
            kept[k] = theta
            k += 1
    return HMCResult(kept, accepted / total, energy_errors)


def gp_log_posterior(X, y, family: str) -> LogDensity:
    """LML plus independent standard normal priors on every log-hyperparameter."""
    X, y = _as_data(X, y)
    family = canonical_family(family)

    def log_density(theta):
        try:
            model = fit_theta(X, y, theta, family)
        except (NotPositiveDefiniteError, ValueError, OverflowError):
            return -np.inf, np.full_like(theta, np.nan)
        lp = model.log_marginal_likelihood() - 0.5 * float(theta @ theta)
        return lp, model.lml_gradient() - theta

    return log_density


def hmc_sample(
    X,
    y,
    family: str = "matern52",
    n_samples: int = 10,
    step_size: float = 0.05,
    leapfrog_steps: int = 10,
    burn_in: int = 20,
    thin: int = 2,
    rng: np.random.Generator | int | None = None,
    init=None,
) -> list[HyperparameterSample]:
    """Sample GP hyperparameters from their posterior.

    Starts from ``init`` (a theta vector or model), else from the heuristic
    default hyperparameters.
    """
    X, y = _as_data(X, y)
    if init is None:
        theta0 = default_theta(X.shape[1])
    elif isinstance(init, GPModel):
        theta0 = init.theta
    else:
        theta0 = np.asarray(init, dtype=float)
    result = hmc(
        gp_log_posterior(X, y, family),
        theta0,
        n_samples=n_samples,
        step_size=step_size,
        leapfrog_steps=leapfrog_steps,
        burn_in=burn_in,
        thin=thin,
        rng=rng,
    )
    return [HyperparameterSample.from_theta(t) for t in result.samples]
