"""Sharp constants for subordination by conformal martingales.

Laguerre-function zeros, the Bellman majorant built from them, grid
certification of the quadratic-form conditions, Monte Carlo checks, and the
resulting Beurling-Ahlfors norm bounds.
"""

from .errors import (
    DegenerateDerivative,
    NoSignChange,
    NonFiniteState,
    OriginUndefined,
)
from .laguerre import (
    LaguerreEval,
    Order,
    ZeroResult,
    bessel_j0,
    bessel_j0_first_zero,
    constant_q,
    laguerre_eval,
    laguerre_identity_residuals,
    laguerre_values,
    mehler_heine_gap,
    smallest_zero,
)
from .bellman import (
    BellmanProfile,
    Obstacle,
    OperatorValues,
    SharpConstants,
    Side,
    build_profile,
    dual_constant_ratio,
    lift_U,
    majorant_g,
    operator_values,
    s_p_threshold,
    sharp_constants,
    sharpness_witness,
    touch_coefficient,
    touching_curve_F,
)
from .verify import VerificationReport, brute_force_form, check_case_split, run_suite
from .bounds import (
    BoundTableRow,
    asymptotic_constants,
    ba_bound_chain,
    ba_bound_theorem,
    comparison_table,
    tau_p,
    tau_upper,
)
from .simulate import SimConfig, SimResult, Strategy, extremal_probe, simulate, supermartingale_check

__version__ = "0.1.0"
