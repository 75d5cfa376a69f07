import importlib

import numpy as np
import pytest

from gpopt import _pykernels
from gpopt._backend import BACKEND

try:
    from gpopt import _ckernels
except ImportError:  # extension not built
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled extension not built")


def test_backend_name():
    assert BACKEND in ("cython", "python")


def test_env_var_forces_python(monkeypatch):
    import gpopt._backend as backend

    monkeypatch.setenv("GPOPT_PURE_PYTHON", "1")
    try:
        reloaded = importlib.reload(backend)
        assert reloaded.BACKEND == "python"
        assert reloaded.kernels is _pykernels
    finally:
        monkeypatch.delenv("GPOPT_PURE_PYTHON")
        importlib.reload(backend)


@needs_ext
@pytest.mark.parametrize("family", [0, 1])
@pytest.mark.parametrize("n1,n2,d", [(1, 1, 1), (7, 5, 3), (40, 30, 2)])
def test_kernel_matrix_agrees(family, n1, n2, d, rng):
    A, B = rng.uniform(size=(n1, d)), rng.uniform(size=(n2, d))
    ls = rng.uniform(0.1, 2, size=d)
    np.testing.assert_allclose(
        _ckernels.kernel_matrix(A, B, ls, 1.7, family),
        _pykernels.kernel_matrix(A, B, ls, 1.7, family),
        rtol=1e-12,
        atol=1e-15,
    )


@needs_ext
@pytest.mark.parametrize("family", [0, 1])
def test_traces_and_gradients_agree(family, rng):
    X = rng.uniform(size=(15, 3))
    W = rng.standard_normal((15, 15))
    W = W + W.T
    ls = rng.uniform(0.2, 1.5, size=3)
    np.testing.assert_allclose(
        _ckernels.lengthscale_traces(X, W, ls, 0.8, family),
        _pykernels.lengthscale_traces(X, W, ls, 0.8, family),
        rtol=1e-10,
        atol=1e-12,
    )
    x = rng.uniform(size=3)
    np.testing.assert_allclose(
        _ckernels.kernel_x_grad(x, X, ls, 0.8, family),
        _pykernels.kernel_x_grad(x, X, ls, 0.8, family),
        rtol=1e-10,
        atol=1e-14,
    )


@needs_ext
def test_distance_and_dominance_agree(rng):
    for _ in range(20):
        A = rng.integers(0, 6, size=(int(rng.integers(2, 30)), int(rng.integers(1, 4)))).astype(float)
        assert _ckernels.min_pairwise_distance(A) == pytest.approx(_pykernels.min_pairwise_distance(A), abs=1e-14)
        if A.shape[1] >= 2:
            np.testing.assert_array_equal(_ckernels.nondominated_mask(A), _pykernels.nondominated_mask(A))


def test_large_kernel_matrix_branch(rng):
    # above the exact-difference size threshold the expanded form is used
    A = rng.uniform(size=(600, 2))
    ls = np.array([0.3, 0.7])
    big = _pykernels.kernel_matrix(A, A, ls, 1.0, 1)
    small = np.vstack([_pykernels.kernel_matrix(A[i : i + 50], A, ls, 1.0, 1) for i in range(0, 600, 50)])
    np.testing.assert_allclose(big, small, atol=1e-10)
    np.testing.assert_allclose(np.diag(big), 1.0, atol=1e-10)
