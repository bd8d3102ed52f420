"""Pfaffian point processes from mixed annihilating/coalescing random walks.

Modules: ``skewalg`` (Pfaffians), ``lattice_sim`` (exact simulation),
``kernel_engine`` (dual ODE kernels), ``continuum`` (closed-form limits),
``stats`` (gap probabilities and decay rates) and ``cli``.
"""

__version__ = "0.1.0"

from ._validation import ConfigError, NumericalError  # noqa: E402
from .estimators import (  # noqa: E402
    BulkPfaffianKernel,
    ContinuumPfaffianKernel,
    LatticePfaffianKernel,
    MonteCarloCorrelation,
)

__all__ = [
    "__version__",
    "ConfigError",
    "NumericalError",
    "BulkPfaffianKernel",
    "ContinuumPfaffianKernel",
    "LatticePfaffianKernel",
    "MonteCarloCorrelation",
]
