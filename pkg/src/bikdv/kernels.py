"""Backend selection for the radial hot kernels.

The compiled extension is used when importable; set ``BIKDV_PURE_PYTHON=1``
to force the numpy/scipy fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("BIKDV_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

flux_apply = _impl.flux_apply
penta_factor = _impl.penta_factor
penta_solve = _impl.penta_solve
moments = _impl.moments

__all__ = ["BACKEND", "flux_apply", "penta_factor", "penta_solve", "moments"]
