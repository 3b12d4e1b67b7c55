"""subsevo: evolve fixed-size training-set subsets as fitness predictors.

Subpackages: `nn` (network core), `data` (datasets and IDX files),
`evolution` (genotypes, operators, the generational loop), `experiment`
(CLI, config files, sweeps and reports).
"""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"
__all__ = ["KERNEL_BACKEND", "__version__"]
