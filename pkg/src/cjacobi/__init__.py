"""Numerical spectral diagnostics for complex Jacobi matrices."""

from .errors import (
    BudgetExceeded,
    DegenerateInitial,
    EmptyRange,
    IndexOutOfTable,
    JacobiError,
    OffsetOutOfRange,
    RootOnBoundary,
    SignChange,
    SlotOutOfRange,
    ZeroOffDiagonal,
)
from .sequences import (
    AdditivePerturbation,
    AsymptoticallyPeriodic,
    Blend,
    CoefficientModel,
    ExplicitTable,
    PeriodicallyModulated,
    PeriodicPair,
    PowerLawExample,
    free_jacobi,
    load_model,
    model_from_json,
    model_to_json,
    periodic,
)
from .transfer import (
    E_MATRIX,
    LambdaScanResult,
    TransferMatrix,
    lambda_scan,
    limit_family,
    n_step,
    one_step,
    sym_part,
)
from .eigen import bound_ratio, carleman, classify, evolve, l2_tail
from .turan import c_matrix, q_form, q_tilde_form, turan, turan_intro, turan_trace, twisted_variation
from .spectrum import Box, charpoly, finite_section, winding_count

__version__ = "0.1.0"
