"""Sampling-backend selection.

The compiled Cython kernels are used when importable; the pure-Python
module is the fallback.  Both consume generator uniforms in the same
documented order and produce bit-identical outputs, so the choice only
affects speed.  Set ``DRIFTMDP_BACKEND=pure`` or ``=compiled`` to force
one (forcing ``compiled`` raises if the extension is missing).
"""

from __future__ import annotations

import os

_requested = os.environ.get("DRIFTMDP_BACKEND", "").strip().lower()

if _requested not in ("", "pure", "compiled"):
    raise ImportError(
        f"DRIFTMDP_BACKEND must be 'pure' or 'compiled', got {_requested!r}"
    )

if _requested == "pure":
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        if _requested == "compiled":
            raise ImportError(
                "DRIFTMDP_BACKEND=compiled but the compiled kernels are not built"
            ) from None
        from . import _kernels_py as _impl

BACKEND_NAME: str = _impl.BACKEND_NAME
sd_chain = _impl.sd_chain
fresh_chain = _impl.fresh_chain
simulate_game = _impl.simulate_game
