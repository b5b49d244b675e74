"""Backend selection for the series kernels.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``AEROFLAT_PURE_PYTHON`` is set, the numpy fallback is
loaded. ``set_backend`` switches at runtime (used by the benchmark and by the
cross-backend tests).
"""
import os

from . import _kernels_py

NAMES = ("mul", "div", "exp", "sincos", "sqrt", "power", "log", "horner", "horner2d")

BACKEND = None


def available():
    out = ["python"]
    try:
        from . import _kernels  # noqa: F401
        out.insert(0, "cython")
    except ImportError:
        pass
    return out


def set_backend(name):
    global BACKEND
    if name == "cython":
        from . import _kernels as impl
    elif name == "python":
        impl = _kernels_py
    else:
        raise ValueError(f"unknown kernel backend {name!r}")
    g = globals()
    for fn in NAMES:
        g[fn] = getattr(impl, fn)
    BACKEND = name


if os.environ.get("AEROFLAT_PURE_PYTHON"):
    set_backend("python")
else:
    try:
        set_backend("cython")
    except ImportError:
        set_backend("python")
