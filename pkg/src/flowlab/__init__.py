"""flowlab: a numerical laboratory for flows of partially regular fields.

The package measures, on desk-scale grids, the quantities a quantitative
stability theory for ordinary-differential flows is built from — maximal
functions, smoothing errors, two-scale logarithmic functionals — and
checks the resulting inequalities end to end.

Layout:

- :mod:`flowlab.space_fields` — grids, split vector fields, growth checks,
  binary persistence.
- :mod:`flowlab.harmonic` — kernels, smoothing, maximal functions, norms,
  difference-quotient and interpolation inequalities.
- :mod:`flowlab.flow` — trajectory integration, compressibility, level-set
  measures of separation.
- :mod:`flowlab.stability` — logarithmic functionals, Chebyshev transfer,
  two-scale schedules, the assembled stability bound.
- :mod:`flowlab.fields` — ready-made example fields.
- :mod:`flowlab.scenarios` / :mod:`flowlab.cli` — the experiment front end.
"""

from .errors import (
    BlowUpError,
    ConfigError,
    DecompositionError,
    DomainError,
    EnsembleMismatchError,
    FieldEvaluationError,
    FlowLabError,
    InfeasibleScheduleError,
    KernelScaleError,
    ProbeResolutionError,
    SampleError,
    StepMismatchError,
)
from .fields import (
    WeierstrassProfile,
    bounded_growth_decomposition,
    contraction_field,
    drift_shear_field,
    shear_field,
    uniform_field,
    weierstrass_shear_field,
    zero_field,
)
from .flow import (
    EULER,
    RK4,
    FlowEnsemble,
    compressibility_constant,
    integrate_flow,
    load_ensemble,
    save_ensemble,
    sublevel_mask,
    superlevel_measure,
    with_l_estimate,
)
from .harmonic import (
    AnisotropicScale,
    DifferenceQuotientReport,
    InterpolationReport,
    MollifierKernel,
    NormReport,
    RateFitReport,
    UBoundReport,
    anisotropic_U,
    difference_quotient_check,
    discrete_kernel,
    fractional_seminorm,
    interpolation_bound,
    l1_norm,
    lp_norm,
    maximal_function,
    mollify_x1,
    norm_report,
    rate_fit,
    smooth_cutoff,
    sup_norm,
    u_bound_check,
    weak_l1_norm,
)
from .config import SCENARIO_NAMES, ExperimentConfig, load_config
from .reporting import (
    ScenarioReport,
    Series,
    Table,
    Verdict,
    emit_report,
)
from .scenarios import run_scenario
from .space_fields import (
    PERIODIC,
    ZERO_OUTSIDE,
    GridFunction,
    GridSpec,
    GrowthDecomposition,
    GrowthReport,
    PartiallyRegularField,
    SpaceSplit,
    divergence_on_grid,
    eval_field,
    grid_partials,
    load_grid_function,
    sample_field_to_grid,
    sample_to_grid,
    save_grid_function,
    verify_growth_decomposition,
)
from .stability import (
    ChebyshevReport,
    FunctionalTrace,
    ParameterSchedule,
    TheoremRhsReport,
    anisotropic_functional,
    chebyshev_bound,
    choose_parameters,
    log_functional,
    theorem_rhs,
)

__version__ = "0.1.0"
