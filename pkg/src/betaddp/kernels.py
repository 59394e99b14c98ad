"""Kernel backend selection.

The compiled Cython module is used when it was built; otherwise the numpy
implementation is loaded. Set ``BETADDP_KERNELS=python`` to force the fallback.
"""
import os

BACKEND = "python"
if os.environ.get("BETADDP_KERNELS", "").lower() != "python":
    try:
        from ._ckernels import allocate_gaussian, occupancy  # noqa: F401

        BACKEND = "cython"
    except ImportError:
        pass
if BACKEND == "python":
    from ._pykernels import allocate_gaussian, occupancy  # noqa: F401

__all__ = ["BACKEND", "allocate_gaussian", "occupancy"]
