"""Kernel selection: compiled integrator core with pure-Python fallback.

At import time the compiled extension (``blowprof._kernel``) is preferred;
when it is unavailable (no compiler at install time, unusual platform) the
pure-Python mirror ``blowprof._kernel_py`` is used instead.  Both expose the
same ``integrate_raw`` / ``rhs_point`` contract and are kept semantically
identical; ``python -m blowprof.benchmark`` compares them.
"""

from __future__ import annotations

from . import _kernel_py

try:  # pragma: no cover - exercised according to build environment
    from . import _kernel  # type: ignore[attr-defined]

    _impl = _kernel
except ImportError:  # pragma: no cover
    _kernel = None
    _impl = _kernel_py

KERNEL = _impl.KERNEL_NAME

integrate_raw = _impl.integrate_raw
rhs_point = _impl.rhs_point

EVENT_PLANE = _kernel_py.EVENT_PLANE
EVENT_BALL = _kernel_py.EVENT_BALL
EVENT_ESCAPE = _kernel_py.EVENT_ESCAPE
EVENT_SURFACE = _kernel_py.EVENT_SURFACE
EVENT_STALL = _kernel_py.EVENT_STALL

STATUS_DONE = _kernel_py.STATUS_DONE
STATUS_EVENT = _kernel_py.STATUS_EVENT
STATUS_MAX_STEPS = _kernel_py.STATUS_MAX_STEPS
STATUS_UNDERFLOW = _kernel_py.STATUS_UNDERFLOW
STATUS_EVENT_OVERFLOW = _kernel_py.STATUS_EVENT_OVERFLOW


def available_kernels() -> dict[str, object]:
    """Importable kernels keyed by name (for benchmarking / parity tests)."""
    kernels: dict[str, object] = {"python": _kernel_py}
    if _kernel is not None:
        kernels["cython"] = _kernel
    return kernels
