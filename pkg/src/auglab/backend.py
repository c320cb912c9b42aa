"""Backend selection for the hot numerical kernels.

The environment variable ``AUGLAB_BACKEND`` picks the implementation:

* ``auto`` (default): numba-compiled kernels if numba imports, else numpy.
* ``numba``: require numba, fail loudly if it is missing.
* ``numpy``: force the pure-numpy kernels (useful for debugging and as the
  reference implementation in benchmarks).
"""

import os

_CHOICES = ("auto", "numba", "numpy")


def _resolve() -> str:
    requested = os.environ.get("AUGLAB_BACKEND", "auto").lower()
    if requested not in _CHOICES:
        raise ValueError(
            f"AUGLAB_BACKEND must be one of {_CHOICES}, got {requested!r}"
        )
    if requested == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if requested == "numba":
            raise
        return "numpy"
    return "numba"


BACKEND = _resolve()
USE_NUMBA = BACKEND == "numba"


def backend_name() -> str:
    return BACKEND
