"""Hot numeric kernels with switchable numba/numpy backends.

Import this module (not ``_numba``/``_numpy`` directly) to get the variant
selected by ``SPIKECAUSE_BACKEND``; see :mod:`spikecause.backend`.
"""

from spikecause.backend import resolve_backend

BACKEND = resolve_backend()

if BACKEND == "numba":
    from spikecause.kernels._numba import (
        adamw_update,
        izhikevich_run,
        layernorm_bwd,
        layernorm_fwd,
        softmax_bwd,
        softmax_fwd,
    )
else:
    from spikecause.kernels._numpy import (
        adamw_update,
        izhikevich_run,
        layernorm_bwd,
        layernorm_fwd,
        softmax_bwd,
        softmax_fwd,
    )

__all__ = [
    "BACKEND",
    "adamw_update",
    "izhikevich_run",
    "layernorm_bwd",
    "layernorm_fwd",
    "softmax_bwd",
    "softmax_fwd",
]
