"""Kernel backend selection.

The numeric hot spots (simulator stepping loop, softmax, layer norm, the
optimizer update) exist in two interchangeable variants: numba ``@njit``
kernels and pure-numpy reference implementations. The active variant is
chosen once at import time from the ``SPIKECAUSE_BACKEND`` environment
variable:

    SPIKECAUSE_BACKEND=numba   require numba (ImportError if unavailable)
    SPIKECAUSE_BACKEND=numpy   force the pure-numpy fallback
    unset / "auto"             use numba when it imports cleanly

Both variants satisfy the same contracts and agree to floating-point
round-off; ``python -m spikecause.benchmark`` compares their speed.
"""

import os

ENV_VAR = "SPIKECAUSE_BACKEND"
_VALID = ("auto", "numba", "numpy")


def requested_backend() -> str:
    """The backend requested via the environment (not yet validated)."""
    value = os.environ.get(ENV_VAR, "auto").strip().lower() or "auto"
    if value not in _VALID:
        raise ValueError(
            f"{ENV_VAR} must be one of {_VALID}, got {value!r}"
        )
    return value


def numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def resolve_backend() -> str:
    """Decide which kernel variant to load: 'numba' or 'numpy'."""
    choice = requested_backend()
    if choice == "numba":
        if not numba_available():
            raise ImportError(
                f"{ENV_VAR}=numba but numba is not importable"
            )
        return "numba"
    if choice == "numpy":
        return "numpy"
    return "numba" if numba_available() else "numpy"
