"""Select the compiled loop kernels, falling back to pure Python.

Set ``GGE_THERMO_PURE_PYTHON=1`` to force the fallback.  ``BACKEND`` names
the implementation in use.
"""
import os

from . import _kernels_py

python = _kernels_py

if os.environ.get("GGE_THERMO_PURE_PYTHON", "") not in ("", "0"):
    compiled = None
else:
    try:
        from . import _speedups as compiled
    except ImportError:
        compiled = None

_impl = compiled if compiled is not None else _kernels_py
BACKEND = "cython" if compiled is not None else "python"

excited_population = _impl.excited_population
raise_level = _impl.raise_level
spin_bath_series = _impl.spin_bath_series
