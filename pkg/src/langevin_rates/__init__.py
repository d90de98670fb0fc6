"""Explicit convergence rates for underdamped Langevin dynamics.

Modules
-------
potentials
    Potentials and their analytic constants (Poincare ``m``, Hessian bound ``K``, growth ``M``).
rates
    The explicit L2 rate, optimal friction and divergence bounds.
dms
    Modified-norm (DMS) rate, its optimisation over ``eps`` and asymptotics.
spectral
    Exact quadratic spectrum, Hermite-Galerkin generator and Poincare solver.
dynamics
    SDE integrators, ensembles, Gaussian moment flow and decay fits.
cli
    ``langevin-rates`` command line front end.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DivergenceError,
    FitFailureError,
    InvalidParameterError,
    LangevinRatesError,
    MissingMetadataError,
    NumericalFailureError,
    UsageError,
)
from .potentials import (  # noqa: E402
    PotentialClass,
    PotentialSpec,
    Regime,
    RegimeR,
    load_potential,
    make_custom,
    make_double_well,
    make_isotropic_quadratic,
    register_custom_potential,
    select_R,
    with_poincare,
)
from .rates import (  # noqa: E402
    RateInputs,
    RateResult,
    divergence_bounds,
    gamma_sweep,
    main_rate,
    optimal_gamma,
    optimal_gamma_general,
    overdamped_rate,
    rate_at_optimal_gamma,
)
from .dms import (  # noqa: E402
    DmsInputs,
    DmsOptimum,
    GammaRegime,
    asym_coupled,
    asym_large_gamma_coeff,
    asym_small_gamma_coeff,
    dms_equivalence_prefactor,
    dms_optimize,
    dms_rate,
    r_ham_bound,
)
from .spectral import (  # noqa: E402
    GeneratorMatrix,
    PoincareEstimate,
    SpectrumResult,
    build_generator_hermite,
    extract_gap,
    matrix_gap,
    poincare_fd,
    quadratic_gap,
    quadratic_spectrum,
    rham_supremum_quadratic,
)
from .dynamics import (  # noqa: E402
    DecayFit,
    EnsembleTable,
    Gaussian,
    IntegratorConfig,
    MomentState,
    PointMass,
    chi2_proxy,
    fit_decay,
    moment_flow_quadratic,
    simulate_ensemble,
    step_overdamped,
    step_underdamped,
    verify_monotone_l2,
)
