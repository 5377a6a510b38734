"""Numeric kernels with a compiled core and a pure-numpy fallback.

The Cython extension ``_fast`` accelerates the closed-form factor families;
if it is missing (or ``MULTIWELL_BACKEND=python`` is set) everything runs on
the numpy reference implementation in ``_ref``.  Both backends share the same
function signatures, and ``tests/test_kernels.py`` pins them to each other.
"""

import os

from . import _ref

try:
    from . import _fast
except ImportError:
    _fast = None

_forced = os.environ.get("MULTIWELL_BACKEND", "auto").lower()
if _forced == "python" or _fast is None:
    BACKEND = "python"
elif _forced in ("auto", "compiled"):
    BACKEND = "compiled"
else:
    raise ValueError(f"MULTIWELL_BACKEND must be 'auto', 'python' or 'compiled', got {_forced!r}")

HAVE_COMPILED = _fast is not None

_COMPILED_FAMILIES = ("dw", "product", "blend")


def _use_fast(spec):
    return BACKEND == "compiled" and spec[0] in _COMPILED_FAMILIES


def factor_values(spec, z):
    if _use_fast(spec):
        return _fast.factor_values(spec, z)
    return _ref.factor_values(spec, z)


def factor_grads(spec, z):
    if _use_fast(spec):
        return _fast.factor_grads(spec, z)
    return _ref.factor_grads(spec, z)


def polyline_cost(spec, nodes):
    if _use_fast(spec):
        return _fast.polyline_cost(spec, nodes)
    return _ref.polyline_cost(spec, nodes)


def polyline_cost_grad(spec, nodes):
    if _use_fast(spec):
        return _fast.polyline_cost_grad(spec, nodes)
    return _ref.polyline_cost_grad(spec, nodes)


def redistribute(nodes, n_out=None):
    if BACKEND == "compiled":
        return _fast.redistribute(nodes, n_out)
    return _ref.redistribute(nodes, n_out)
