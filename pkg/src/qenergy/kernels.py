"""Hot-loop dispatch: the compiled lattice kernel when it was built, the numpy
version otherwise.  Set QENERGY_PURE_PYTHON=1 to force the numpy version."""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

_compiled = None
if os.environ.get("QENERGY_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def available_backends() -> list[str]:
    return ["python"] + (["cython"] if _compiled is not None else [])


def get_kernel(backend: str | None = None):
    backend = backend or BACKEND
    if backend == "python":
        return _kernels_py.rho_lattice
    if backend == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernel is not available")
        return _compiled.rho_lattice
    raise ValueError(f"unknown backend {backend!r}")


def rho_lattice(x, t, coef, x0, p0, sigma, hbar: float = 1.0, mass: float = 1.0,
                backend: str | None = None):
    """(rho_scaled, log_scale) on the (t, x) lattice; rho = rho_scaled * exp(2 log_scale)."""
    coef = np.asarray(coef, dtype=complex)
    x0, p0, sigma = (np.asarray(v, dtype=float) for v in (x0, p0, sigma))
    if not (coef.shape == x0.shape == p0.shape == sigma.shape) or coef.ndim != 1:
        raise ValueError("component arrays must be 1D and of equal length")
    if np.any(sigma <= 0):
        raise ValueError("widths must be positive")
    return get_kernel(backend)(np.asarray(x, float), np.asarray(t, float), coef, x0, p0, sigma,
                               float(hbar), float(mass))
