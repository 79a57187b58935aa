"""Hot-kernel backends.

The compiled extension is used when it was built; otherwise the numpy
fallback is selected. ``GRAPHBLI_BACKEND`` forces a choice:

- ``auto`` (default): compiled if importable, else python
- ``compiled``: raise ImportError if the extension is missing
- ``python``: always use the numpy fallback
"""

import os
from types import SimpleNamespace

from . import _fallback

try:
    from . import _ckernels, _csinkhorn
except ImportError:  # extensions not built
    _ckernels = _csinkhorn = None

BACKENDS = {"python": SimpleNamespace(name="python", lap_min=_fallback.lap_min,
                                      sinkhorn_log=_fallback.sinkhorn_log)}
if _ckernels is not None:
    BACKENDS["compiled"] = SimpleNamespace(name="compiled", lap_min=_ckernels.lap_min,
                                           sinkhorn_log=_csinkhorn.sinkhorn_log)


def get_backend(name="auto"):
    """Return the kernel namespace for ``name``."""
    if name == "auto":
        return BACKENDS.get("compiled", BACKENDS["python"])
    if name not in BACKENDS:
        if name == "compiled":
            raise ImportError("compiled kernels are not built; "
                              "reinstall with Cython available")
        raise ValueError(f"unknown backend {name!r}")
    return BACKENDS[name]


_active = get_backend(os.environ.get("GRAPHBLI_BACKEND", "auto"))


def active():
    return _active


def set_backend(name):
    """Switch the process-wide backend; returns the previous name."""
    global _active
    prev = _active.name
    _active = get_backend(name)
    return prev
