"""Dense feed-forward networks with hand-written backward passes.

Weights are stored ``(out_dim, in_dim)`` so a layer computes
``x @ W.T + b``; column ``j`` of the first weight matrix is the fan-out of
input feature ``j``.
"""

from dataclasses import dataclass, field

import numpy as np

from meib.errors import DimensionError, ParameterError

ACTIVATIONS = ("relu", "tanh", "sigmoid", "identity")


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    activation: str = "relu"

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ParameterError(f"layer dims must be >= 1: {self}")
        if self.activation not in ACTIVATIONS:
            raise ParameterError(f"unknown activation {self.activation!r}")


@dataclass
class Mlp:
    layers: list
    weights: list
    biases: list

    def __post_init__(self):
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.out_dim != nxt.in_dim:
                raise DimensionError(f"layer dims do not chain: {prev} -> {nxt}")

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def params(self) -> list:
        """Parameter arrays in declaration order ``[W0, b0, W1, b1, ...]``."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "Mlp":
        return Mlp(
            list(self.layers),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )


def chain_specs(dims, activations) -> list:
    """``LayerSpec`` list for widths ``dims[0] -> dims[1] -> ...``."""
    if isinstance(activations, str):
        activations = [activations] * (len(dims) - 1)
    return [LayerSpec(a, b, act) for a, b, act in zip(dims, dims[1:], activations)]


def init_params(specs, seed) -> Mlp:
    """He-uniform for ReLU layers, Xavier-uniform otherwise; zero biases."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for s in specs:
        if s.activation == "relu":
            bound = np.sqrt(6.0 / s.in_dim)
        else:
            bound = np.sqrt(6.0 / (s.in_dim + s.out_dim))
        weights.append(rng.uniform(-bound, bound, size=(s.out_dim, s.in_dim)))
        biases.append(np.zeros(s.out_dim))
    return Mlp(list(specs), weights, biases)


def _activate(kind, pre):
    if kind == "relu":
        return np.maximum(pre, 0.0)
    if kind == "tanh":
        return np.tanh(pre)
    if kind == "sigmoid":
        return 0.5 * (np.tanh(0.5 * pre) + 1.0)
    return pre


def _activation_grad(kind, pre, post, upstream):
    if kind == "relu":
        return upstream * (pre > 0)
    if kind == "tanh":
        return upstream * (1.0 - post * post)
    if kind == "sigmoid":
        return upstream * post * (1.0 - post)
    return upstream


@dataclass
class Trace:
    """Per-layer inputs and pre/post activations retained for backprop."""

    inputs: list = field(default_factory=list)
    pre: list = field(default_factory=list)
    post: list = field(default_factory=list)

    @property
    def output(self) -> np.ndarray:
        return self.post[-1]


def forward(mlp: Mlp, x) -> Trace:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != mlp.in_dim:
        raise DimensionError(f"input shape {x.shape} does not match in_dim {mlp.in_dim}")
    trace = Trace()
    h = x
    for spec, w, b in zip(mlp.layers, mlp.weights, mlp.biases):
        trace.inputs.append(h)
        pre = h @ w.T + b
        h = _activate(spec.activation, pre)
        trace.pre.append(pre)
        trace.post.append(h)
    return trace


def backward(mlp: Mlp, trace: Trace, upstream):
    """Gradients ``[dW0, db0, ...]`` and the gradient w.r.t. the input."""
    g = np.asarray(upstream, dtype=np.float64)
    if len(trace.pre) != len(mlp.layers) or g.shape != trace.output.shape:
        raise DimensionError("trace or upstream gradient does not match the network")
    grads = [None] * (2 * len(mlp.layers))
    for i in range(len(mlp.layers) - 1, -1, -1):
        spec = mlp.layers[i]
        g = _activation_grad(spec.activation, trace.pre[i], trace.post[i], g)
        grads[2 * i] = g.T @ trace.inputs[i]
        grads[2 * i + 1] = g.sum(axis=0)
        g = g @ mlp.weights[i]
    return grads, g


def softmax_cross_entropy(logits, labels):
    """Mean cross-entropy in nats and its gradient w.r.t. the logits."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels)
    n, c = logits.shape
    if labels.shape != (n,):
        raise DimensionError(f"labels shape {labels.shape} != ({n},)")
    if n and (labels.min() < 0 or labels.max() >= c):
        raise ParameterError(f"labels must lie in [0, {c})")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_p = shifted - log_z
    rows = np.arange(n)
    loss = -float(log_p[rows, labels].mean())
    grad = np.exp(log_p)
    grad[rows, labels] -= 1.0
    return loss, grad / n


class Sgd:
    kind = "sgd"

    def __init__(self, learning_rate=1e-3):
        self.learning_rate = learning_rate
        self.t = 0

    def step(self, params, grads):
        _check_shapes(params, grads)
        self.t += 1
        for p, g in zip(params, grads):
            p -= self.learning_rate * g


class Adam:
    kind = "adam"

    def __init__(self, learning_rate=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = None
        self.v = None

    def step(self, params, grads):
        _check_shapes(params, grads)
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.learning_rate * (m / c1) / (np.sqrt(v / c2) + self.eps)


def make_optimizer(kind, learning_rate):
    if kind == "adam":
        return Adam(learning_rate)
    if kind == "sgd":
        return Sgd(learning_rate)
    raise ParameterError(f"unknown optimizer {kind!r}")


def _check_shapes(params, grads):
    if len(params) != len(grads):
        raise DimensionError(f"{len(params)} parameters but {len(grads)} gradients")
    for p, g in zip(params, grads):
        if np.shape(p) != np.shape(g):
            raise DimensionError(f"parameter {np.shape(p)} vs gradient {np.shape(g)}")
