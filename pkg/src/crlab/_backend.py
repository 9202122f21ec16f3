"""Kernel backend selection: compiled extension when available, Python twin otherwise."""

from __future__ import annotations

try:
    from . import _kernels as _impl
    BACKEND = "cython"
except ImportError:
    from . import _kernels_py as _impl
    BACKEND = "python"

sim_run = _impl.sim_run
subproblem_ascent = _impl.subproblem_ascent


def get_backend(name: str):
    """Return a specific kernel module ("cython" or "python") for benchmarks."""
    if name == "python":
        from . import _kernels_py
        return _kernels_py
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")
