"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports. Setting
``ROBUST_SPECTRA_BACKEND=pure`` forces the numpy fallback and ``=ext`` makes a
missing extension an error instead of a silent fallback.
"""

import logging
import os

from . import _pure

log = logging.getLogger(__name__)

_choice = os.environ.get("ROBUST_SPECTRA_BACKEND", "auto").lower()

if _choice == "pure":
    kernels = _pure
else:
    try:
        from . import _kernels as kernels
    except ImportError:
        if _choice == "ext":
            raise
        log.debug("compiled kernels unavailable, using numpy fallback")
        kernels = _pure

NAME = "pure" if kernels is _pure else "ext"

psi = kernels.psi
psi_prime = kernels.psi_prime
psi_sum = kernels.psi_sum
psi_sum_slope = kernels.psi_sum_slope
solve_beta = kernels.solve_beta
jacobi_eigh = kernels.jacobi_eigh
dykstra = kernels.dykstra
