"""Kernel selection: compiled Cython core if built, numpy fallback otherwise.

Set ``QMIX_PURE_PYTHON=1`` to force the fallback (useful for benchmarking and
for checking that both paths agree).
"""

import os

from . import _fallback

BACKEND = "python"
_impl = _fallback

if not os.environ.get("QMIX_PURE_PYTHON"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _fallback

run_program = _impl.run_program
subset_purity_sum = _impl.subset_purity_sum
