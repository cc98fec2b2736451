"""Matrix-based Renyi alpha-order entropy and mutual information.

Entropies are computed from the eigenspectrum of a trace-normalized Gaussian
Gram matrix and reported in bits. Gradients are analytic: the derivative of
``tr(A**alpha)`` with respect to ``A`` is ``alpha * A**(alpha - 1)``, chained
through the Hadamard joint-entropy construction and the Gaussian kernel.
"""

import math
from dataclasses import dataclass

import numpy as np

from meib import _backend
from meib.errors import (
    DimensionError,
    InsufficientSamplesError,
    NumericError,
    ParameterError,
)
from meib.linalg import EIG_CLAMP, SymEig, spectral_function, sym_eig, sym_eigvals

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class KernelConfig:
    alpha: float = 1.01
    k_nn: int = 10
    sigma_floor: float = 1e-6
    # "batch": sigma re-estimated on every mini-batch; "epoch": once per pass
    # over the training set (input-view sigma fixed for the whole run).
    sigma_mode: str = "batch"

    def __post_init__(self):
        _check_alpha(self.alpha)
        if self.k_nn < 1:
            raise ParameterError(f"k_nn must be >= 1, got {self.k_nn}")
        if not self.sigma_floor > 0:
            raise ParameterError("sigma_floor must be positive")
        if self.sigma_mode not in ("batch", "epoch"):
            raise ParameterError(f"unknown sigma_mode {self.sigma_mode!r}")


@dataclass(frozen=True)
class NormalizedGram:
    """Symmetric PSD kernel matrix with unit trace, ``A = K / tr(K)``."""

    a: np.ndarray

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @classmethod
    def from_matrix(cls, a, tol: float = 1e-10) -> "NormalizedGram":
        """Wrap an existing matrix after checking the unit-trace invariants."""
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"Gram matrix must be square, got {a.shape}")
        n = a.shape[0]
        if not np.all(np.isfinite(a)):
            raise NumericError("Gram matrix has non-finite entries")
        if np.abs(a - a.T).max() > tol:
            raise NumericError("Gram matrix is not symmetric")
        if abs(np.trace(a) - 1.0) > tol:
            raise NumericError(f"Gram matrix trace {np.trace(a)!r} != 1")
        if np.abs(np.diag(a) - 1.0 / n).max() > tol:
            raise NumericError("Gram matrix diagonal is not constant 1/N")
        return cls(a)

    @classmethod
    def from_kernel(cls, k) -> "NormalizedGram":
        k = np.asarray(k, dtype=np.float64)
        return cls(k / np.trace(k))


@dataclass(frozen=True)
class EntropyGradient:
    """Value of an information quantity and its gradient w.r.t. one batch."""

    value: float
    d_input: np.ndarray


def _check_alpha(alpha):
    if not alpha > 0 or alpha == 1:
        raise ParameterError(f"alpha must be positive and != 1, got {alpha}")


def _as_gram(g) -> np.ndarray:
    return g.a if isinstance(g, NormalizedGram) else np.asarray(g, dtype=np.float64)


def estimate_sigma(batch, k_nn: int = 10, sigma_floor: float = 1e-6) -> float:
    """Kernel width from the k-nearest-neighbour heuristic.

    Each sample's mean Euclidean distance to its ``k_nn`` nearest other
    samples, averaged over all samples. Uses all ``N - 1`` neighbours when
    fewer than ``k_nn`` exist.
    """
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim == 1:
        batch = batch[:, None]
    n = batch.shape[0]
    if n < 2:
        raise InsufficientSamplesError("sigma estimation needs at least 2 samples")
    k = min(int(k_nn), n - 1)
    dist = np.sqrt(_backend.pairwise_sq_dists(batch))
    np.fill_diagonal(dist, np.inf)
    nearest = np.partition(dist, k - 1, axis=1)[:, :k]
    sigma = float(nearest.mean(axis=1).mean())
    return max(sigma, sigma_floor)


def gaussian_kernel(batch, sigma: float) -> np.ndarray:
    """Unnormalized Gaussian Gram matrix ``exp(-|x_m - x_n|^2 / (2 sigma^2))``."""
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma}")
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim == 1:
        batch = batch[:, None]
    if batch.shape[0] < 1:
        raise InsufficientSamplesError("empty batch")
    return np.exp(_backend.pairwise_sq_dists(batch) / (-2.0 * sigma * sigma))


def normalized_gram(batch, sigma: float) -> NormalizedGram:
    k = gaussian_kernel(batch, sigma)
    # Unit diagonal, so tr(K) = N exactly.
    return NormalizedGram(k / k.shape[0])


def _trace_power(w: np.ndarray, alpha: float) -> float:
    # Non-positive eigenvalues contribute nothing; the clamp is only needed
    # for the negative exponent in the gradient.
    return float(np.sum(np.maximum(w, 0.0) ** alpha))


def _entropy_from_eigvals(w: np.ndarray, alpha: float) -> float:
    return math.log2(_trace_power(w, alpha)) / (1.0 - alpha)


def renyi_entropy(g, alpha: float = 1.01) -> float:
    """Renyi alpha-order entropy (bits) of a normalized Gram matrix."""
    _check_alpha(alpha)
    return _entropy_from_eigvals(sym_eigvals(_as_gram(g)), alpha)


def hadamard_normalized(gx, gz) -> np.ndarray:
    ax, az = _as_gram(gx), _as_gram(gz)
    if ax.shape != az.shape:
        raise DimensionError(f"Gram size mismatch {ax.shape} vs {az.shape}")
    p = ax * az
    return p / np.trace(p)


def joint_entropy(gx, gz, alpha: float = 1.01) -> float:
    """Entropy of the trace-renormalized Hadamard product of two Grams."""
    _check_alpha(alpha)
    return _entropy_from_eigvals(sym_eigvals(hadamard_normalized(gx, gz)), alpha)


def mutual_information(gx, gz, alpha: float = 1.01) -> float:
    """``H(gx) + H(gz) - H(gx, gz)`` in bits."""
    return (
        renyi_entropy(gx, alpha)
        + renyi_entropy(gz, alpha)
        - joint_entropy(gx, gz, alpha)
    )


def _entropy_and_grad(eig: SymEig, alpha: float):
    trace_pow = _trace_power(eig.eigenvalues, alpha)
    h = math.log2(trace_pow) / (1.0 - alpha)
    scale = alpha / ((1.0 - alpha) * _LN2 * trace_pow)
    grad = spectral_function(
        eig, lambda lam: scale * np.maximum(lam, EIG_CLAMP) ** (alpha - 1.0)
    )
    return h, grad


def entropy_gradient_wrt_gram(g, alpha: float = 1.01) -> np.ndarray:
    """``dH_alpha / dA`` for a normalized Gram ``A``, entries treated as independent."""
    _check_alpha(alpha)
    return _entropy_and_grad(sym_eig(_as_gram(g)), alpha)[1]


def _through_trace_normalization(grad_a: np.ndarray, k: np.ndarray) -> np.ndarray:
    # A = K / tr(K)  =>  dF/dK = G / t - <G, K> / t^2 * I
    t = np.trace(k)
    out = grad_a / t
    out[np.diag_indices_from(out)] -= np.sum(grad_a * k) / (t * t)
    return out


def mi_gradient_wrt_batch(
    x_batch,
    z_batch,
    cfg: KernelConfig = KernelConfig(),
    sigma_x: float | None = None,
    sigma_z: float | None = None,
) -> EntropyGradient:
    """``I(X; Z)`` in bits and its gradient with respect to ``z_batch``.

    Kernel widths are estimated from each batch unless given, and are held
    constant for differentiation. ``x_batch`` is treated as data.
    """
    x = np.asarray(x_batch, dtype=np.float64)
    z = np.asarray(z_batch, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if z.ndim == 1:
        z = z[:, None]
    n = z.shape[0]
    if x.shape[0] != n:
        raise DimensionError(f"batch sizes differ: {x.shape[0]} vs {n}")
    if n < 2:
        raise InsufficientSamplesError("mutual information needs at least 2 samples")
    alpha = cfg.alpha
    if sigma_x is None:
        sigma_x = estimate_sigma(x, cfg.k_nn, cfg.sigma_floor)
    if sigma_z is None:
        sigma_z = estimate_sigma(z, cfg.k_nn, cfg.sigma_floor)

    kx = gaussian_kernel(x, sigma_x)
    kz = gaussian_kernel(z, sigma_z)
    ax = kx / np.trace(kx)
    az = kz / np.trace(kz)
    p = ax * az
    tp = np.trace(p)
    c = p / tp

    hx = _entropy_from_eigvals(sym_eigvals(ax), alpha)
    hz, gz = _entropy_and_grad(sym_eig(az), alpha)
    hj, gc = _entropy_and_grad(sym_eig(c), alpha)

    # Joint term: C = P / tr(P), P = A_x o A_z.
    d_p = _through_trace_normalization(gc, p)
    d_az = gz - ax * d_p
    d_kz = _through_trace_normalization(d_az, kz)

    w = d_kz * kz
    w = w + w.T
    grad = (w @ z - w.sum(axis=1)[:, None] * z) / (sigma_z * sigma_z)
    if not np.all(np.isfinite(grad)):
        raise NumericError("non-finite mutual-information gradient")
    return EntropyGradient(hx + hz - hj, grad)
