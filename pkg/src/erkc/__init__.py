"""Exponential Runge-Kutta collocation methods for semilinear parabolic
problems with time-dependent delay."""

from .delay import (
    HISTORY,
    DelaySpec,
    DiscontinuitySet,
    Mesh,
    build_mesh,
    compute_discontinuities,
    constant_delay,
    mesh_from_nodes,
)
from .errors import ERKCError
from .harness import (
    ComputedReference,
    ConvergenceStudy,
    OrderFit,
    error_norm,
    fit_order,
    parse_steps,
    run_study,
)
from .history import ExponentialDenseOutput, InterpolantStore, ModifiedInterpolantStore
from .integrator import MethodConfig, Integrator, integrate, verify_no_future_reference
from .phi import (
    CollocationScheme,
    check_order_conditions,
    gauss,
    make_scheme,
    phi,
    phi_series,
    radau_iia,
    scheme_from_name,
    weight_b,
    weight_matrix,
)
from .problems import ProblemSpec, example_1, example_2, example_3, example_4, get_problem
from .spectral import (
    DiagonalizableOperator,
    dirichlet_laplacian_1d,
    dirichlet_laplacian_2d,
    explicit_diagonal,
    periodic_laplacian_1d,
)

__version__ = "0.1.0"
