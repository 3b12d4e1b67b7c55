"""Kernel backends against naive loop oracles.

Every test runs once per importable backend via the kernel_backend fixture.
"""

import numpy as np
import pytest

from subsevo.nn import ShapeError, conv2d_forward, maxpool_forward
from subsevo import _kernels

from oracles import conv2d_naive, maxpool_naive


def test_conv_identity_1x1_kernel(kernel_backend, rng):
    x = rng.normal(size=(2, 3, 4, 5))
    kernels = np.zeros((3, 3, 1, 1))
    for c in range(3):
        kernels[c, c, 0, 0] = 1.0
    out = conv2d_forward(x, kernels, np.zeros(3))
    np.testing.assert_allclose(out, x, atol=1e-12)


def test_conv_window_sum(kernel_backend):
    x = np.array([[1.0, 2.0], [3.0, 4.0]]).reshape(1, 1, 2, 2)
    kernels = np.ones((1, 1, 2, 2))
    out = conv2d_forward(x, kernels, np.zeros(1))
    assert out.shape == (1, 1, 1, 1)
    assert out[0, 0, 0, 0] == 10.0


def test_conv_matches_naive_oracle(kernel_backend, rng):
    x = rng.normal(size=(1, 2, 5, 5))
    kernels = rng.normal(size=(3, 2, 3, 3))
    bias = rng.normal(size=3)
    out = conv2d_forward(x, kernels, bias)
    np.testing.assert_allclose(out, conv2d_naive(x, kernels, bias), atol=1e-12)


@pytest.mark.parametrize("stride", [(1, 1), (2, 2), (2, 3), (3, 1)])
def test_conv_strides_match_naive_oracle(kernel_backend, rng, stride):
    x = rng.normal(size=(2, 3, 9, 8))
    kernels = rng.normal(size=(4, 3, 3, 2))
    bias = rng.normal(size=4)
    out = conv2d_forward(x, kernels, bias, stride=stride)
    np.testing.assert_allclose(out, conv2d_naive(x, kernels, bias, stride),
                               atol=1e-12)


def test_conv_rejects_oversized_kernel(kernel_backend, rng):
    x = rng.normal(size=(1, 1, 3, 3))
    with pytest.raises(ShapeError):
        conv2d_forward(x, rng.normal(size=(1, 1, 4, 4)), np.zeros(1))


@pytest.mark.parametrize("stride", [(1, 1), (2, 2), (1, 3)])
def test_conv_backward_matches_fd(kernel_backend, rng, stride):
    # d/dtheta of sum(conv(x) * grad_out) via central differences
    x = rng.normal(size=(2, 2, 7, 7))
    kernels = rng.normal(size=(3, 2, 2, 2))
    bias = rng.normal(size=3)
    sh, sw = stride
    out_shape = (2, 3, (7 - 2) // sh + 1, (7 - 2) // sw + 1)
    grad_out = rng.normal(size=out_shape)
    gx, gk, gb = _kernels.conv2d_backward(x, kernels, sh, sw,
                                          np.ascontiguousarray(grad_out))
    eps = 1e-6

    def loss():
        return float((conv2d_forward(x, kernels, bias, stride)
                      * grad_out).sum())

    for arr, grad in ((x, gx), (kernels, gk), (bias, gb)):
        flat = arr.reshape(-1)
        picks = rng.choice(flat.size, size=min(10, flat.size), replace=False)
        for idx in picks:
            keep = flat[idx]
            flat[idx] = keep + eps
            up = loss()
            flat[idx] = keep - eps
            down = loss()
            flat[idx] = keep
            fd = (up - down) / (2 * eps)
            assert abs(fd - grad.reshape(-1)[idx]) < 1e-5 * max(1.0, abs(fd))


def test_maxpool_simple(kernel_backend):
    x = np.array([[1.0, 2.0], [3.0, 4.0]]).reshape(1, 1, 2, 2)
    out, argmax = maxpool_forward(x, (2, 2), (2, 2))
    assert out[0, 0, 0, 0] == 4.0
    assert argmax[0, 0, 0, 0] == 3  # flat index into the 2x2 plane


def test_maxpool_constant_input(kernel_backend):
    x = np.full((1, 2, 6, 6), 0.7)
    out, _ = maxpool_forward(x, (3, 3), (3, 3))
    assert out.shape == (1, 2, 2, 2)
    assert np.all(out == 0.7)


def test_maxpool_matches_naive_oracle(kernel_backend, rng):
    x = rng.normal(size=(1, 1, 4, 4))
    out, _ = maxpool_forward(x, (2, 2), (2, 2))
    np.testing.assert_allclose(out, maxpool_naive(x), atol=1e-15)


@pytest.mark.parametrize("window,stride", [((3, 3), (3, 3)), ((2, 2), (2, 2)),
                                           ((3, 2), (1, 2)), ((2, 3), (2, 1))])
def test_maxpool_geometries_match_oracle(kernel_backend, rng, window, stride):
    x = rng.normal(size=(2, 3, 9, 8))
    out, _ = maxpool_forward(x, window, stride)
    np.testing.assert_allclose(out, maxpool_naive(x, window, stride),
                               atol=1e-15)


def test_maxpool_rejects_oversized_window(kernel_backend, rng):
    with pytest.raises(ShapeError):
        maxpool_forward(rng.normal(size=(1, 1, 2, 2)), (3, 3), (1, 1))


def test_maxpool_backward_routes_to_argmax(kernel_backend, rng):
    x = rng.normal(size=(2, 2, 6, 6))
    out, argmax = maxpool_forward(x, (2, 2), (2, 2))
    grad_out = rng.normal(size=out.shape)
    gx = _kernels.maxpool_backward(np.ascontiguousarray(grad_out), argmax, 6, 6)
    assert gx.shape == x.shape
    # total mass preserved and only argmax positions touched
    assert np.isclose(gx.sum(), grad_out.sum())
    flat = gx.reshape(2, 2, -1)
    touched = set()
    for b in range(2):
        for c in range(2):
            touched |= {(b, c, int(i)) for i in argmax[b, c].reshape(-1)}
    nonzero = {(b, c, i) for b, c, i in zip(*np.nonzero(flat))}
    assert nonzero <= touched


def test_kernels_accept_read_only_inputs(kernel_backend, rng):
    # dataset tensors are immutable; kernels must take them as-is
    x = rng.normal(size=(1, 2, 6, 6))
    kernels = rng.normal(size=(3, 2, 3, 3))
    bias = np.zeros(3)
    for arr in (x, kernels, bias):
        arr.flags.writeable = False
    out = conv2d_forward(x, kernels, bias)
    grad = np.ascontiguousarray(out)
    grad.flags.writeable = False
    _kernels.conv2d_backward(x, kernels, 1, 1, grad)
    pooled, argmax = maxpool_forward(x, (2, 2), (2, 2))
    pgrad = np.ascontiguousarray(pooled)
    pgrad.flags.writeable = False
    argmax.flags.writeable = False
    _kernels.maxpool_backward(pgrad, argmax, 6, 6)


def test_backends_agree(rng):
    backends = _kernels.available_backends()
    if len(backends) < 2:
        pytest.skip("only one backend importable")
    x = rng.normal(size=(3, 4, 10, 9))
    kernels = rng.normal(size=(5, 4, 3, 3))
    bias = rng.normal(size=5)
    grad_out = None
    results = {}
    for name, impl in backends.items():
        out = impl.conv2d_forward(x, kernels, bias, 1, 1)
        if grad_out is None:
            grad_out = np.random.default_rng(0).normal(size=out.shape)
        back = impl.conv2d_backward(x, kernels, 1, 1,
                                    np.ascontiguousarray(grad_out))
        pool, arg = impl.maxpool_forward(x, 2, 2, 2, 2)
        results[name] = (out, back, pool, arg)
    ref = results.pop("numpy")
    for other in results.values():
        np.testing.assert_allclose(other[0], ref[0], atol=1e-10)
        for a, b in zip(other[1], ref[1]):
            np.testing.assert_allclose(a, b, atol=1e-10)
        np.testing.assert_allclose(other[2], ref[2], atol=1e-15)
        np.testing.assert_array_equal(other[3], ref[3])
