"""Elementwise training kernels with an optional compiled fast path.

The Cython extension is used when it was built; setting the environment
variable ``RISKFACTORS_PURE_PYTHON=1`` before import forces the numpy
fallback. Both backends are interchangeable (see the parity tests) up to
floating-point library differences of a few ulps.
"""

import os

from . import _pure

IDENTITY = _pure.IDENTITY
GELU = _pure.GELU
SELU = _pure.SELU
SWISH = _pure.SWISH

if os.environ.get("RISKFACTORS_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pure
else:
    try:
        from . import _speedups as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pure

BACKEND = _impl.NAME
act_forward = _impl.act_forward
act_grad = _impl.act_grad
adam_step = _impl.adam_step


def available_backends():
    """Mapping backend name -> module, for parity tests and benchmarks."""
    out = {"python": _pure}
    try:
        from . import _speedups
        out["cython"] = _speedups
    except ImportError:
        pass
    return out
