"""Pure-numpy versions of the hot kernels.

Signatures mirror ``_ckernels``; ``gpopt._backend`` picks one at import.
Family codes: 0 squared exponential, 1 Matern 5/2.
"""

import numpy as np

SQRT5 = np.sqrt(5.0)


def _scaled_sqdist(X1, X2, lengthscales):
    A = X1 / lengthscales
    B = X2 / lengthscales
    d2 = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.maximum(d2, 0.0)


def _exact_sqdist(X1, X2, lengthscales):
    diff = (X1[:, None, :] - X2[None, :, :]) / lengthscales
    return (diff * diff).sum(-1)


def kernel_matrix(X1, X2, lengthscales, signal_variance, family):
    X1 = np.asarray(X1, dtype=float)
    X2 = np.asarray(X2, dtype=float)
    ls = np.asarray(lengthscales, dtype=float)
    # the expanded form loses digits near zero distance; stay exact for small inputs
    if X1.shape[0] * X2.shape[0] * X1.shape[1] <= 250_000:
        r2 = _exact_sqdist(X1, X2, ls)
    else:
        r2 = _scaled_sqdist(X1, X2, ls)
    if family == 0:
        return signal_variance * np.exp(-0.5 * r2)
    r = np.sqrt(r2)
    return signal_variance * (1.0 + SQRT5 * r + (5.0 / 3.0) * r2) * np.exp(-SQRT5 * r)


def _radial_factor(r2, signal_variance, family):
    # g such that dk/dx_i = -g * (x_i - x'_i) / l_i^2
    if family == 0:
        return signal_variance * np.exp(-0.5 * r2)
    r = np.sqrt(r2)
    return signal_variance * (5.0 / 3.0) * (1.0 + SQRT5 * r) * np.exp(-SQRT5 * r)


def lengthscale_traces(X, W, lengthscales, signal_variance, family):
    """sum_ab W_ab dK_ab/dlog(l_i) for every input dimension i."""
    X = np.asarray(X, dtype=float)
    ls = np.asarray(lengthscales, dtype=float)
    diff = (X[:, None, :] - X[None, :, :]) / ls
    sq = diff * diff
    g = _radial_factor(sq.sum(-1), signal_variance, family)
    return np.einsum("ab,abi->i", W * g, sq)


def kernel_x_grad(x, X, lengthscales, signal_variance, family):
    """d k(x, X_j) / dx as an (n, d) array."""
    x = np.asarray(x, dtype=float)
    X = np.asarray(X, dtype=float)
    ls = np.asarray(lengthscales, dtype=float)
    diff = x[None, :] - X
    r2 = ((diff / ls) ** 2).sum(1)
    g = _radial_factor(r2, signal_variance, family)
    return -g[:, None] * diff / (ls * ls)


def min_pairwise_distance(A):
    A = np.asarray(A, dtype=float)
    diff = A[:, None, :] - A[None, :, :]
    d2 = (diff * diff).sum(-1)
    iu = np.triu_indices(A.shape[0], 1)
    return float(np.sqrt(d2[iu].min()))


def nondominated_mask(Y):
    """True for rows not dominated by any other row (minimization)."""
    Y = np.asarray(Y, dtype=float)
    le = (Y[:, None, :] <= Y[None, :, :]).all(-1)  # le[q, p]: q weakly below p
    lt = (Y[:, None, :] < Y[None, :, :]).any(-1)
    dominated = (le & lt).any(0)
    return ~dominated
