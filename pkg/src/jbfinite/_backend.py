"""Selects the simulation kernel at import: compiled extension when present,
pure-Python twin otherwise.  Set ``JBFINITE_FORCE_PYTHON=1`` to force the
fallback (used by the parity tests and the benchmark).
"""

from __future__ import annotations

import os

from . import _kernel_py

try:
    from . import _kernel as _compiled
except ImportError:
    _compiled = None

if os.environ.get("JBFINITE_FORCE_PYTHON") == "1" or _compiled is None:
    _active = _kernel_py
else:
    _active = _compiled

simulate_chunk = _active.simulate_chunk
fill_uniforms = _active.fill_uniforms
fill_normals = _active.fill_normals


def backend_name() -> str:
    """Name of the kernel in use: ``"c"`` or ``"python"``."""
    return _active.BACKEND


def available_kernels() -> dict:
    """All importable kernels, keyed by backend name."""
    kernels = {_kernel_py.BACKEND: _kernel_py}
    if _compiled is not None:
        kernels[_compiled.BACKEND] = _compiled
    return kernels
