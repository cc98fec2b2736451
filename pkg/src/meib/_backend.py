"""Kernel backend selection.

The compiled Cython module is preferred; ``MEIB_BACKEND=python`` forces the
pure-Python kernels, and a failed import of the extension falls back silently.
"""

import os

from meib import _pykernels

_requested = os.environ.get("MEIB_BACKEND", "auto").lower()

if _requested == "python":
    _kernels = _pykernels
    BACKEND = "python"
else:
    try:
        from meib import _ckernels as _kernels

        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        _kernels = _pykernels
        BACKEND = "python"

eigh_tridiag_ql = _kernels.eigh_tridiag_ql
pairwise_sq_dists = _kernels.pairwise_sq_dists

__all__ = ["BACKEND", "eigh_tridiag_ql", "pairwise_sq_dists"]
