"""Backend selection for the hot kernels.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy fallback in ``_pykernels`` is used. Setting ``NETLEARN_BACKEND=python``
forces the fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

python_backend = _pykernels

try:
    from . import _ckernels as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

if compiled_backend is not None and os.environ.get("NETLEARN_BACKEND", "").lower() != "python":
    backend = compiled_backend
    BACKEND = "cython"
else:
    backend = _pykernels
    BACKEND = "python"

arrival_table = backend.arrival_table
exit_curve = backend.exit_curve
nash_profiles = backend.nash_profiles
