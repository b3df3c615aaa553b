"""Randomized row/column-action solvers for consistent matrix equations
A X B = C, with problem generators, convergence-rate formulas, and an
image-deblurring application."""

from .matrices import (
    KronSizeError,
    SvdFactors,
    as_csr,
    as_dense,
    col_norms,
    frobenius_norm,
    kron,
    pinv,
    row_norms,
    svd,
    unvec,
    vec,
)
from .problems import (
    BlurSpec,
    GrayImage,
    InconsistentSystemWarning,
    TypeISpec,
    blur_problem,
    gaussian_toeplitz,
    gen_type1,
    gen_type2,
    load_matrix_market,
    make_problem,
    min_norm_solution,
    psnr,
    read_pgm,
    uniform_toeplitz,
    write_matrix_market,
    write_pgm,
)
from .rates import (
    RateBundle,
    beta_max,
    gamma_max,
    general_grabk_rate,
    grabk_adaptive_rate,
    grabk_const_rate,
    grbk_rate,
    grk_rate,
    rate_bundle,
    weighting_sigma_min,
)
from .sampling import (
    BlockPartition,
    CategoricalDistribution,
    SeededRng,
    categorical,
    frobenius_block_probs,
    make_partition,
    sample_block,
)
from .solvers import (
    ConvergenceReport,
    Problem,
    SolverConfig,
    TraceRecord,
    adaptive_stepsize,
    constant_stepsize,
    grabk_step,
    grbk_step,
    grk_step,
    prepare_state,
    relative_error,
    rk_kronecker_step,
    solve,
    uniform_constant_stepsize,
)

__version__ = "0.1.0"
