"""Fast time stepping for fractional Zener viscoelastic waves.

The package pairs a sum-of-exponentials compression of the Mittag-Leffler
relaxation kernel with a mixed finite element discretisation in space and
Newmark time stepping.
"""

from .errors import (
    AccuracyError,
    AdmissibilityError,
    AssemblyError,
    DivergenceError,
    DomainError,
    InvalidArgumentError,
    SoeValidityWarning,
    SolverError,
    UnsupportedConfigurationError,
    ValidityError,
)
from .fem import (
    AssembledOperators,
    DofLayout,
    MaterialModel,
    RectMesh,
    assemble_operators,
    build_dof_layout,
    build_mesh,
    project_initial_data,
)
from .mittag_leffler import ml_one_param_ref, ml_two_param_series
from .quadrature import adaptive_integrate, gauss_legendre_rule
from .soe import (
    SoeExpansion,
    SoeParams,
    admissible_l_bound,
    build_soe,
    select_K_J,
    soe_error_bound,
    soe_eval,
)
from .solvers import (
    NewmarkParams,
    RunStats,
    TimeGrid,
    Trajectory,
    fast_solve,
    l1_newmark_solve,
    load_trajectory,
    save_trajectory,
)

__version__ = "0.1.0"
