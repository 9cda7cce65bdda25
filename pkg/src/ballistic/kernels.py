"""Backend selection for the hot loops.

The compiled extension is preferred. Set ``BALLISTIC_BACKEND=python`` to force
the pure-Python fallback (the test suite runs both).
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _pykernels


def _load_compiled() -> ModuleType | None:
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels


_compiled = _load_compiled()


def available_backends() -> dict[str, ModuleType]:
    out = {"python": _pykernels}
    if _compiled is not None:
        out["cython"] = _compiled
    return out


def _select() -> ModuleType:
    wanted = os.environ.get("BALLISTIC_BACKEND", "").strip().lower()
    if wanted == "python" or _compiled is None:
        return _pykernels
    return _compiled


_impl = _select()
BACKEND: str = _impl.BACKEND

thomas = _impl.thomas
cn_step = _impl.cn_step
explicit_step = _impl.explicit_step
bouncer_rk4 = _impl.bouncer_rk4
