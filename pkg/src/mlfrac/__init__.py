"""Mittag-Leffler series solutions of fractional Cauchy problems with
Caputo derivatives of orders nu*k, plus the subordination and random-motion
tools built on them."""

from mlfrac._backend import BACKEND
from mlfrac._version import __version__
from mlfrac.charpoly import (
    CharPolynomial,
    MultiplicityError,
    RootFindingError,
    RootSpectrum,
    ZeroRootError,
    find_roots,
    residue_weights,
)
from mlfrac.laplace import (
    caputo_derivative_numeric,
    convolve_numeric,
    invert_laplace,
    laplace_transform_solution,
)
from mlfrac.mc import MCEstimate
from mlfrac.motion import (
    MotionPath,
    MotionSpec,
    cf_initial_derivative,
    empirical_cf,
    orthogonal_cf_nu1,
    orthogonal_problem,
    simulate_path,
    telegraph_decomposition_check,
    three_direction_problem,
)
from mlfrac.solver import (
    CauchyProblem,
    Forcing,
    SolutionExpansion,
    evaluate_solution,
    k_threshold,
    solve,
    solve_distinct,
    solve_general,
    solve_nonhomogeneous,
)
from mlfrac.special import (
    MLConvergenceError,
    MLParams2,
    MLParamsMultivariate,
    MLParamsPrabhakar,
    PoleError,
    TruncationPolicy,
    log_gamma,
    ml2,
    ml_multivariate,
    ml_prabhakar,
    ml_shift_identity,
)
from mlfrac.subordination import (
    GVariableSpec,
    SubordinationPlan,
    build_associated_problem,
    g_density,
    iterated_brownian_mc,
    mellin_g,
    sample_g,
    subordinate_mc,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
