"""Selects the truncated-product kernel: compiled Cython if importable, else numpy.

Both kernels accumulate the same products in the same order, so results are
bit-identical.
"""

import numpy as np

try:
    from ._ckernels import mul_into as _c_mul_into
except ImportError:  # extension not built
    _c_mul_into = None


def _mul_numpy(a, b, table):
    ia, ib, ic = table
    return np.bincount(ic, weights=a[ia] * b[ib], minlength=a.shape[0])


def _mul_compiled(a, b, table):
    ia, ib, ic = table
    out = np.zeros(a.shape[0])
    _c_mul_into(a, b, ia, ib, ic, out)
    return out


_KERNELS = {"python": _mul_numpy}
if _c_mul_into is not None:
    _KERNELS["compiled"] = _mul_compiled

_active = "compiled" if "compiled" in _KERNELS else "python"
mul = _KERNELS[_active]


def available_backends():
    return sorted(_KERNELS)


def get_backend():
    return _active


def set_backend(name):
    """Switch the product kernel globally; returns the previous backend name."""
    global _active, mul
    if name not in _KERNELS:
        raise ValueError(f"backend {name!r} unavailable; have {available_backends()}")
    previous = _active
    _active = name
    mul = _KERNELS[name]
    return previous
