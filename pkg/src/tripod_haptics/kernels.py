"""Backend selection for the contact kernels.

The compiled extension is used when it imports; otherwise the pure-Python
module is used. Set ``TRIPOD_HAPTICS_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

SPHERE = _pykernels.SPHERE
HALFSPACE = _pykernels.HALFSPACE
BOX = _pykernels.BOX
CYLINDER = _pykernels.CYLINDER

_impl = _pykernels
if not os.environ.get("TRIPOD_HAPTICS_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

signed_distance = _impl.signed_distance
proxy_update = _impl.proxy_update
proxy_walk = _impl.proxy_walk
proxy_batch = _impl.proxy_batch
cone_wrenches = _impl.cone_wrenches


def backends():
    """Return ``{name: module}`` for every importable backend."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        found["cython"] = _ckernels
    return found
