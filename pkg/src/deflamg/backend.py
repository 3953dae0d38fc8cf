"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback keeps
the package fully functional without a compiler. ``DEFLAMG_KERNELS=py`` forces
the fallback, ``DEFLAMG_KERNELS=c`` requires the extension (import error if it
is missing). Both backends expose the same functions over raw CSR arrays.
"""
import os

_forced = os.environ.get("DEFLAMG_KERNELS", "").strip().lower()

if _forced in ("py", "python", "pure"):
    from . import _kernels_py as kernels

    COMPILED = False
elif _forced in ("c", "cy", "compiled", "ext"):
    from . import _kernels as kernels  # type: ignore[no-redef]

    COMPILED = True
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]

        COMPILED = True
    except ImportError:
        from . import _kernels_py as kernels  # type: ignore[no-redef]

        COMPILED = False

__all__ = ["kernels", "COMPILED"]
