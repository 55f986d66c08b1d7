"""Hot kernels: compiled backend when built, numpy fallback otherwise.

Set ``STNET_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels as python

compiled = None
if os.environ.get("STNET_PURE_PYTHON", "") in ("", "0"):
    try:
        from . import _ckernels as compiled
    except ImportError:  # extension not built
        compiled = None

_impl = compiled if compiled is not None else python
BACKEND = "cython" if compiled is not None else "python"

im2col = _impl.im2col
col2im = _impl.col2im
maxpool_forward = _impl.maxpool_forward
maxpool_backward = _impl.maxpool_backward


def backends():
    """Available backend modules keyed by name."""
    out = {"python": python}
    if compiled is not None:
        out["cython"] = compiled
    return out
