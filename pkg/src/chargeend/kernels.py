"""Backend selection for the per-sample loops.

The compiled extension is used when it was built; otherwise, or when
``CHARGEEND_PURE_PYTHON=1`` is set, the pure-Python twin is loaded.
"""

from __future__ import annotations

import os

from . import _pykernels

if os.environ.get("CHARGEEND_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _pykernels

BACKEND: str = _impl.BACKEND
run_pipeline = _impl.run_pipeline
simulate_charge = _impl.simulate_charge
SimulationError = _impl.SimulationError


def available_backends() -> dict:
    """Map backend name to module, for benchmarks and cross-checks."""
    backends = {"python": _pykernels}
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        pass
    else:
        backends["cython"] = _kernels
    return backends
