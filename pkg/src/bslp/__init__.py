"""Block-sparse recovery by mixed l2/lp minimization.

The hot kernels (block norms, the lp proximal map) come from a compiled
extension when it is available and from numpy otherwise; ``BACKEND`` names
the one in use. Set ``BSLP_PURE_PYTHON=1`` before import to force numpy.
"""

from .baselines import BompConfig, block_omp
from .block_model import (
    BlockPartition,
    BlockSupport,
    best_block_approx,
    block_norms,
    block_sup_norm,
    block_support_size,
    cai_zhang_bound,
    cone_constraint_holds,
    mixed_norm,
    mixed_norm_p,
)
from .kernels import BACKEND
from .polytope import ConvexDecomposition, decompose, membership_alpha, tail_decomposition
from .prox import prox_block, prox_scalar, prox_vector
from .sensing import (
    MatrixEnsemble,
    NoiseModel,
    generate_block_sparse_signal,
    generate_matrix,
    measure,
    spectral_norm,
)
from .solver import AdmmConfig, Continuation, SolverDiverged, SolverResult, admm_solve, objective
from .theory import (
    ThresholdParams,
    TheoryReport,
    block_rip_exact,
    block_rip_monte_carlo,
    build_report,
    constants_ds,
    constants_l2,
    error_bound_check,
    phi_threshold,
    sample_complexity,
    solve_mu,
)

__version__ = "0.1.0"

from types import ModuleType as _ModuleType

__all__ = [k for k, v in dict(globals()).items() if not k.startswith("_") and not isinstance(v, _ModuleType)]
