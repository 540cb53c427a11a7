"""Kernel backend selection.

The Cython build is used when importable; setting ARTIFACT_PURE_PYTHON=1
forces the pure-Python fallback (useful for benchmarks and debugging).
"""

import os

if os.environ.get("ARTIFACT_PURE_PYTHON") == "1":
    from artifact import _pykernels as _impl
    BACKEND = "python"
else:
    try:
        from artifact import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        from artifact import _pykernels as _impl
        BACKEND = "python"

mask_sign = _impl.mask_sign
merge_sign = _impl.merge_sign
mul_terms = _impl.mul_terms

__all__ = ["BACKEND", "mask_sign", "merge_sign", "mul_terms"]
