"""Hot numeric kernels with a compiled and a pure-numpy implementation.

The compiled path is used when numba imports cleanly and the environment
variable ``HERITAGE_ASSESS_DISABLE_NUMBA`` is unset (or set to ``0``/``false``).
Both paths are importable directly as ``numba_impl`` / ``numpy_impl`` for
tests and benchmarks.
"""

import logging
import os

from . import _numpy as numpy_impl

logger = logging.getLogger(__name__)

ENV_FLAG = "HERITAGE_ASSESS_DISABLE_NUMBA"


def _numba_requested():
    return os.environ.get(ENV_FLAG, "").strip().lower() in ("", "0", "false", "no")


numba_impl = None
try:
    from . import _numba as numba_impl
except ImportError:  # pragma: no cover - numba is a declared dependency
    logger.warning("numba unavailable, using numpy kernels")

USE_NUMBA = numba_impl is not None and _numba_requested()
BACKEND = "numba" if USE_NUMBA else "numpy"

_impl = numba_impl if USE_NUMBA else numpy_impl

gbt_best_split = _impl.gbt_best_split
gini_best_split = _impl.gini_best_split
minkowski_distances = _impl.minkowski_distances
tree_apply = _impl.tree_apply

__all__ = [
    "BACKEND",
    "ENV_FLAG",
    "USE_NUMBA",
    "gbt_best_split",
    "gini_best_split",
    "minkowski_distances",
    "numba_impl",
    "numpy_impl",
    "tree_apply",
]
