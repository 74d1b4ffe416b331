import os
import subprocess
import sys

import numpy as np
import pytest

from dsshare.agent import _kernels_python, kernels
from dsshare.agent.networks import init_mlp, param_count

from .reference import central_diff, forward_one

try:
    from dsshare.agent import _kernels as _kernels_c
except ImportError:  # pragma: no cover
    _kernels_c = None

BACKENDS = [pytest.param(_kernels_python, id="python")]
BACKENDS.append(
    pytest.param(_kernels_c, id="cython", marks=pytest.mark.skipif(_kernels_c is None, reason="extension not built"))
)


def run(backend, theta, sizes, x, dout):
    B = x.shape[0]
    h1, h2, out = np.empty((B, sizes[1])), np.empty((B, sizes[2])), np.empty(B)
    backend.mlp_forward(theta, sizes, x, h1, h2, out)
    grad, dx = np.empty_like(theta), np.empty_like(x)
    backend.mlp_backward(theta, sizes, x, h1, h2, dout, grad, dx)
    return out, grad, dx


@pytest.fixture
def net():
    rng = np.random.default_rng(7)
    sizes = (5, 6, 4, 1)
    return sizes, init_mlp(sizes, rng) * 2.0, rng


@pytest.mark.parametrize("backend", BACKENDS)
def test_forward_matches_reference(backend, net):
    sizes, theta, rng = net
    x = rng.normal(size=(7, 5))
    out, _, _ = run(backend, theta, sizes, x, np.zeros(7))
    expected = [forward_one(theta, sizes, row) for row in x]
    np.testing.assert_allclose(out, expected, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_backward_matches_finite_differences(backend, net):
    sizes, theta, rng = net
    x = rng.normal(size=(6, 5))
    w = rng.normal(size=6)

    def loss(th, xx=x):
        return float(np.dot(w, [forward_one(th, sizes, row) for row in xx]))

    _, grad, dx = run(backend, theta, sizes, x, w)
    for idx in rng.choice(theta.size, 12, replace=False):
        assert grad[idx] == pytest.approx(central_diff(loss, theta, idx), rel=1e-5, abs=1e-8)
    flat_x = x.reshape(-1)
    for idx in rng.choice(flat_x.size, 6, replace=False):
        num = central_diff(lambda fx: loss(theta, fx.reshape(x.shape)), flat_x, idx)
        assert dx.reshape(-1)[idx] == pytest.approx(num, rel=1e-5, abs=1e-8)


@pytest.mark.skipif(_kernels_c is None, reason="extension not built")
@pytest.mark.parametrize("batch", [1, 3, 64, 257])
def test_backends_agree(batch):
    rng = np.random.default_rng(batch)
    sizes = (11, 64, 64, 1)
    theta = init_mlp(sizes, rng)
    x = rng.normal(size=(batch, 11))
    dout = rng.normal(size=batch)
    for a, b in zip(run(_kernels_python, theta, sizes, x, dout), run(_kernels_c, theta, sizes, x, dout)):
        np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
def test_read_only_inputs(backend, net):
    sizes, theta, rng = net
    theta = theta.copy()
    theta.setflags(write=False)
    x = rng.normal(size=(2, 5))
    x.setflags(write=False)
    out, _, _ = run(backend, theta, sizes, x, np.ones(2))
    assert np.all(np.isfinite(out))


def test_param_count_matches_layout():
    sizes = (3, 4, 5, 1)
    theta = np.arange(param_count(sizes), dtype=float)
    views = kernels.unpack(theta, sizes)
    assert [v.shape for v in views] == [(3, 4), (4,), (4, 5), (5,), (5, 1), (1,)]
    assert sum(v.size for v in views) == theta.size


def test_fallback_selected_by_env():
    env = dict(os.environ, DSSHARE_BACKEND="python")
    out = subprocess.run(
        [sys.executable, "-c", "from dsshare.agent import kernels; print(kernels.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    assert out.stdout.strip() == "python"
