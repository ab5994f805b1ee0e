"""Backend selection: the compiled kernel when it imports, numpy otherwise.

Set ``SNN_BACKEND=python`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _fallback

try:
    if os.environ.get("SNN_BACKEND", "").lower() == "python":
        raise ImportError("fallback forced by SNN_BACKEND")
    from . import _kernel as _compiled
except ImportError:
    _compiled = None

BACKENDS = {"python": _fallback.simulate}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled.simulate

DEFAULT = "compiled" if _compiled is not None else "python"


def get(name: str | None = None):
    name = name or DEFAULT
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
