"""Numerical laboratory for the divergence-form inhomogeneous NLS:
ground states, sharp weighted Gagliardo-Nirenberg constants, blow-up runs,
and the quantitative diagnostics that go with them."""

__version__ = "0.1.0"

from .grid import (
    Grading,
    RadialField,
    RadialGrid,
    apply_ab,
    ball_integral,
    build_grid,
    grad_norm_b,
    shell_integral,
    weighted_norm,
)
from .model import (
    CriticalityClass,
    DerivedIndices,
    ModelParams,
    Regime,
    TheoremFlag,
    classify,
    derive_indices,
    scale_field,
)
from .groundstate import (
    EllipticKind,
    EllipticProblem,
    GroundStateProfile,
    RelaxConfig,
    ShootingConfig,
    pohozaev_residuals,
    relax_weinstein,
    shoot,
)
from .gn import (
    BatterySpec,
    GNKind,
    GNReport,
    InequalityCheck,
    InequalityKind,
    make_battery,
    sharp_constant,
    tail_quotient,
    verify_inequality,
    weinstein_quotient,
)
from .evolve import (
    BlowupReason,
    BlowupReport,
    EvolveConfig,
    SimState,
    TimeSeries,
    adapt_dt,
    run,
    step,
)
from .diagnostics import (
    BoundReport,
    RateFit,
    RhoReport,
    VirialWeights,
    check_bounds,
    check_virial_estimate,
    concentration,
    conserved_quantities,
    fit_blowup_rate,
    m_infty,
    rho,
    virial_series,
    virial_weights,
)
