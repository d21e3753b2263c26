"""Hot kernels: compiled extension when built, numpy fallback otherwise.

Set ``SEGHARMONY_PURE_PYTHON=1`` to force the fallback.
"""
import os

from ._tanhfit_py import fit_tanh_batch as fit_tanh_batch_py

BACKEND = "python"
fit_tanh_batch = fit_tanh_batch_py
fit_tanh_batch_ext = None

if os.environ.get("SEGHARMONY_PURE_PYTHON", "") != "1":
    try:
        from ._tanhfit import fit_tanh_batch as fit_tanh_batch_ext
    except ImportError:  # extension not built
        fit_tanh_batch_ext = None
    else:
        fit_tanh_batch = fit_tanh_batch_ext
        BACKEND = "cython"

__all__ = ["BACKEND", "fit_tanh_batch", "fit_tanh_batch_py", "fit_tanh_batch_ext"]
