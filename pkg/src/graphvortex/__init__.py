"""Non-Abelian multiple vortex equations on finite connected weighted graphs."""

from .errors import (
    Disconnected,
    Diverged,
    DuplicateEdge,
    IncompatibleSource,
    Infeasible,
    InputError,
    InvalidExponent,
    InvalidKind,
    InvalidParams,
    InvalidSize,
    MaxIterations,
    NonPositiveMeasure,
    NonPositiveWeight,
    OverflowGuard,
    ParseError,
    SelfLoop,
    UnknownVertex,
    VortexError,
)
from .formats import format_graph, load_graph, load_vortices, parse_graph, parse_vortices
from .generators import generate
from .graph import (
    Graph,
    build_graph,
    gradient_form,
    integrate,
    laplacian,
    norms,
    poincare_constant,
    solve_poisson,
)
from .solver import (
    Solution,
    SolveOptions,
    cross_check_equal_coupling,
    solve_scalar,
    solve_vortex,
)
from .sweep import SweepPlan, SweepReport, run_sweep
from .vortex import (
    BackgroundField,
    ModelParams,
    State,
    VortexSet,
    background_u0,
    check_bounds,
    check_feasible,
    check_identities,
    dirac_field,
    energy,
    energy_gradient,
    energy_hessian,
    residual,
    scalar_residual,
    threshold,
)

__version__ = "0.1.0"
