"""Open-loop Nash equilibria of linear-quadratic games on random chains and trees."""

__version__ = "0.1.0"

from .catalan import (  # noqa: E402
    GeneratorMatrix,
    StationaryCoefficients,
    TransitionKernel,
    asymptotic_variance_chain,
    bessel_k_half,
    catalan_generator,
    kernel_entry,
    kernel_row,
    rho,
    stationary_chain_coeffs,
    variance_chain,
)
from .errors import (  # noqa: E402
    ConvergenceError,
    DomainError,
    IntegrationError,
    LQChainError,
    ResourceError,
    SimulationError,
    TruncationError,
    ValidationError,
)
from .riccati import (  # noqa: E402
    ChainParams,
    RiccatiSolution,
    TwoSidedParams,
    eval_generating_function_chain,
    eval_generating_function_twosided,
    solve_chain_riccati,
    solve_twosided_riccati,
)
from .sim import (  # noqa: E402
    PathEnsemble,
    SimConfig,
    estimate_cost,
    exact_variance_crosscheck,
    nash_deviation_test,
    simulate,
)
from .tree import (  # noqa: E402
    TreeParams,
    TreeRiccatiSolution,
    deterministic_limit_check,
    solve_tree_riccati,
    tree_equilibrium_drift,
    verify_depth_invariance,
)
from .twosided import (  # noqa: E402
    TwoSidedStationary,
    hyp2f1,
    stationary_twosided_coeffs,
    twosided_kernel_weight,
)
