"""Select the compiled core or the numpy fallback at import time.

Set ``MLP_CURSE_BACKEND=python`` to force the fallback.
"""

import os

_core = None
if os.environ.get("MLP_CURSE_BACKEND", "").lower() not in ("python", "pure", "numpy"):
    try:
        from . import _core  # noqa: F811
    except ImportError:  # extension not built
        _core = None

BACKEND = "compiled" if _core is not None else "python"


def compiled_available() -> bool:
    return _core is not None
