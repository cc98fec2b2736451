"""Dense symmetric linear algebra on numpy float64 arrays.

Matrices are plain 2-D ``numpy.ndarray`` objects. The eigensolver runs in the
compiled kernel when available (see ``meib._backend``).
"""

from dataclasses import dataclass

import numpy as np

from meib import _backend
from meib.errors import DimensionError, NotPSDError, NumericError, ParameterError

EIG_CLAMP = 1e-12
PSD_SLACK = 1e-6


@dataclass(frozen=True)
class SymEig:
    """Eigen-decomposition ``m = U diag(w) U^T`` with ascending ``w``."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.T


def _check_square(m) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericError("matrix has non-finite entries")
    return m


def symmetrize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.T)


def sym_eig(m) -> SymEig:
    """Full eigen-decomposition of a symmetric matrix.

    The input is symmetrized as ``(m + m.T) / 2`` first, so small rounding
    asymmetries from Gram construction are tolerated.
    """
    m = symmetrize(_check_square(m))
    w, u = _backend.eigh_tridiag_ql(m, True)
    return SymEig(w, u)


def sym_eigvals(m) -> np.ndarray:
    """Ascending eigenvalues only; cheaper than :func:`sym_eig`."""
    m = symmetrize(_check_square(m))
    w, _ = _backend.eigh_tridiag_ql(m, False)
    return w


def spectral_function(eig: SymEig, f) -> np.ndarray:
    """``U diag(f(w)) U^T`` for a vectorized scalar function ``f``."""
    u = eig.eigenvectors
    out = (u * f(eig.eigenvalues)) @ u.T
    return symmetrize(out)


def check_psd(w: np.ndarray, slack: float = PSD_SLACK) -> None:
    if w.size and w[0] < -slack:
        raise NotPSDError(f"smallest eigenvalue {w[0]:.3e} below -{slack:g}")


def spectral_power(m, p: float) -> np.ndarray:
    """Matrix power ``m**p`` of a symmetric PSD matrix.

    Eigenvalues are clamped at ``EIG_CLAMP`` before exponentiation.
    """
    if not p > 0:
        raise ParameterError(f"exponent must be positive, got {p}")
    eig = sym_eig(m)
    check_psd(eig.eigenvalues)
    return spectral_function(eig, lambda w: np.maximum(w, EIG_CLAMP) ** p)


def hadamard(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return a * b
