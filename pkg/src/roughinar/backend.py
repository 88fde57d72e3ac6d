"""Backend selection: compiled extension if available, numpy fallback otherwise.

Set ROUGHINAR_BACKEND=numpy (or =ext) to force a choice; the default "auto"
prefers the extension. The active module is re-exported as `impl`; both
backends expose the same function surface (see `roughinar._fallback`).
"""

import os

from . import _fallback

_requested = os.environ.get("ROUGHINAR_BACKEND", "auto").lower()

if _requested not in ("auto", "ext", "numpy"):
    raise ImportError(f"ROUGHINAR_BACKEND={_requested!r} not understood "
                      "(expected auto, ext or numpy)")

impl = None
if _requested in ("auto", "ext"):
    try:
        from . import _core as impl  # type: ignore[no-redef]
    except ImportError:
        if _requested == "ext":
            raise
if impl is None:
    impl = _fallback

ACTIVE = "ext" if impl is not _fallback else "numpy"

DOMAIN_POISSON = _fallback.DOMAIN_POISSON
DOMAIN_GAUSS = _fallback.DOMAIN_GAUSS
DOMAIN_UNIFORM = _fallback.DOMAIN_UNIFORM

renewal_recursion = impl.renewal_recursion
simulate_inar_block = impl.simulate_inar_block
volterra_block = impl.volterra_block
gaussians = impl.gaussians
poissons = impl.poissons
raw_block = impl.raw_block
