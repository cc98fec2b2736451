import math

import numpy as np
import pytest

from conftest import central_diff, max_rel_err
from meib import nn
from meib.errors import DimensionError, ParameterError


def scalar_forward(mlp, x):
    """Loop-based reference forward pass."""
    acts = {
        "relu": lambda v: max(v, 0.0),
        "tanh": math.tanh,
        "sigmoid": lambda v: 1.0 / (1.0 + math.exp(-v)),
        "identity": lambda v: v,
    }
    h = [list(row) for row in x]
    for spec, w, b in zip(mlp.layers, mlp.weights, mlp.biases):
        out = []
        for row in h:
            out.append([
                acts[spec.activation](sum(w[o, i] * row[i] for i in range(spec.in_dim)) + b[o])
                for o in range(spec.out_dim)
            ])
        h = out
    return np.array(h)


def test_identity_layer_passes_input_through(rng):
    mlp = nn.Mlp([nn.LayerSpec(3, 3, "identity")], [np.eye(3)], [np.zeros(3)])
    x = rng.normal(size=(4, 3))
    np.testing.assert_array_equal(nn.forward(mlp, x).output, x)
    grads, dx = nn.backward(mlp, nn.forward(mlp, x), x)
    np.testing.assert_array_equal(dx, x)


def test_relu_layer():
    mlp = nn.Mlp([nn.LayerSpec(2, 2, "relu")], [np.eye(2)], [np.zeros(2)])
    np.testing.assert_array_equal(nn.forward(mlp, np.array([[-1.0, 2.0]])).output, [[0.0, 2.0]])


@pytest.mark.parametrize("acts", [("relu", "identity"), ("tanh", "sigmoid")])
def test_forward_matches_scalar_reference(rng, acts):
    mlp = nn.init_params(nn.chain_specs([4, 5, 3], list(acts)), seed=3)
    mlp.biases = [rng.normal(size=b.shape) for b in mlp.biases]
    x = rng.normal(size=(6, 4))
    np.testing.assert_allclose(nn.forward(mlp, x).output, scalar_forward(mlp, x), atol=1e-12)


def test_forward_dimension_error():
    mlp = nn.init_params(nn.chain_specs([4, 2], "relu"), 0)
    with pytest.raises(DimensionError):
        nn.forward(mlp, np.zeros((3, 5)))


def test_chain_mismatch_rejected():
    with pytest.raises(DimensionError):
        nn.Mlp([nn.LayerSpec(2, 3), nn.LayerSpec(4, 1)], [np.zeros((3, 2)), np.zeros((1, 4))], [np.zeros(3), np.zeros(1)])


def test_softmax_ce_uniform():
    loss, grad = nn.softmax_cross_entropy(np.zeros((5, 2)), np.array([0, 1, 0, 1, 1]))
    assert loss == pytest.approx(math.log(2), abs=1e-15)
    np.testing.assert_allclose(grad.sum(axis=1), 0.0, atol=1e-16)


def test_softmax_ce_decreases_with_margin():
    losses = [nn.softmax_cross_entropy(np.array([[m, 0.0, 0.0]]), np.array([0]))[0] for m in (2, 5, 10)]
    assert losses[0] > losses[1] > losses[2] > 0


def test_softmax_ce_gradient_fd(rng):
    logits, labels = rng.normal(size=(4, 3)), np.array([0, 2, 1, 2])
    _, grad = nn.softmax_cross_entropy(logits, labels)
    fd = central_diff(lambda z: nn.softmax_cross_entropy(z, labels)[0], logits)
    assert np.abs(grad - fd).max() < 1e-6 * max(1.0, np.abs(grad).max())
    assert max_rel_err(grad, fd) < 1e-6


def test_softmax_ce_large_logits_finite():
    loss, grad = nn.softmax_cross_entropy(np.array([[1e4, -1e4], [-1e4, 1e4]]), np.array([1, 1]))
    assert np.isfinite(loss) and np.all(np.isfinite(grad))
    assert loss == pytest.approx(1e4)


def test_softmax_ce_label_range():
    with pytest.raises(ParameterError):
        nn.softmax_cross_entropy(np.zeros((2, 2)), np.array([0, 2]))


@pytest.mark.parametrize("act", ["relu", "tanh", "sigmoid"])
def test_backward_matches_fd(rng, act):
    mlp = nn.init_params(nn.chain_specs([3, 5, 4, 2], [act, act, "identity"]), seed=7)
    mlp.biases = [0.1 * rng.normal(size=b.shape) for b in mlp.biases]
    x = rng.normal(size=(5, 3))
    target = rng.normal(size=(5, 2))

    trace = nn.forward(mlp, x)
    grads, dx = nn.backward(mlp, trace, trace.output - target)
    for p, g in zip(mlp.params(), grads):
        def f(arr, p=p):
            saved = p.copy()
            p[...] = arr
            out = 0.5 * np.sum((nn.forward(mlp, x).output - target) ** 2)
            p[...] = saved
            return out
        assert max_rel_err(g, central_diff(f, p)) < 1e-5
    fdx = central_diff(lambda xx: 0.5 * np.sum((nn.forward(mlp, xx).output - target) ** 2), x)
    assert max_rel_err(dx, fdx) < 1e-5


def test_zero_upstream_gives_zero_gradients(rng):
    mlp = nn.init_params(nn.chain_specs([3, 4, 2], "tanh"), 1)
    trace = nn.forward(mlp, rng.normal(size=(3, 3)))
    grads, dx = nn.backward(mlp, trace, np.zeros((3, 2)))
    assert all(not g.any() for g in grads) and not dx.any()


def test_backward_shape_error(rng):
    mlp = nn.init_params(nn.chain_specs([3, 2], "relu"), 1)
    trace = nn.forward(mlp, rng.normal(size=(4, 3)))
    with pytest.raises(DimensionError):
        nn.backward(mlp, trace, np.zeros((4, 3)))


def test_sgd_step():
    p = np.array([1.0])
    nn.Sgd(0.1).step([p], [np.array([2.0])])
    assert p[0] == pytest.approx(0.8)


def test_adam_first_step_is_unit_scaled():
    p = np.array([1.0])
    nn.Adam(0.01).step([p], [np.array([3.7])])
    assert p[0] == pytest.approx(1.0 - 0.01, abs=1e-8)


def test_adam_converges_on_quadratic():
    p = np.array([1.0])
    opt = nn.Adam(0.05)
    for _ in range(100):
        opt.step([p], [2 * p])
    # Oracle: the same recursion in plain scalars.
    q, m, v = 1.0, 0.0, 0.0
    for t in range(1, 101):
        g = 2 * q
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        q -= 0.05 * (m / (1 - 0.9 ** t)) / (math.sqrt(v / (1 - 0.999 ** t)) + 1e-8)
    assert p[0] == pytest.approx(q, abs=1e-12)
    # the scalar recursion lands at |p| ~ 4.2e-3 after 100 steps
    assert abs(q) < 5e-3


def test_optimizer_shape_mismatch():
    with pytest.raises(DimensionError):
        nn.Sgd(0.1).step([np.zeros(2)], [np.zeros(3)])


def test_init_determinism_and_scale():
    specs = nn.chain_specs([512, 512, 10], ["relu", "identity"])
    a, b, c = nn.init_params(specs, 5), nn.init_params(specs, 5), nn.init_params(specs, 6)
    assert all(np.array_equal(x, y) for x, y in zip(a.params(), b.params()))
    assert not np.array_equal(a.weights[0], c.weights[0])
    assert a.weights[0].var() == pytest.approx(2.0 / 512, rel=0.2)
    assert a.weights[1].var() == pytest.approx(2.0 / (512 + 10), rel=0.2)
