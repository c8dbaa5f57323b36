"""ainftylab: numerics for A-infinity weights, Carleson measures of heat
extensions, doubling certificates, and elliptic measures at infinity.

The hot quadrature kernels run through numba when available; set
``AINFTYLAB_NUMBA=0`` to force the pure-numpy fallback (see
:mod:`ainftylab.accel`).
"""

__version__ = "0.1.0"

from ainftylab.weights import (  # noqa: F401
    BallQuery, DoublingProfile, GoodDoublingReport, WeightSpec, annulus_modulus,
    ball_measure, doubling_constant, eval_weight, good_doubling_deficit,
    log_ball_mean,
)
from ainftylab.heat import (  # noqa: F401
    HeatSample, KernelDescriptor, heat_gradient, heat_pair, heat_sample,
    heat_value, kernel_average, relative_gradient_sup,
)
from ainftylab.carleson import (  # noqa: F401
    BoxMass, CarlesonBox, CarlesonEstimate, box_mass, carleson_norm, density,
)
from ainftylab.ainfty import (  # noqa: F401
    AInftyEstimate, KoreyReport, SweepRow, ainfty_constant, ball_ratio,
    korey_check, sweep,
)
from ainftylab.fkp import (  # noqa: F401
    IdentityReport, centered_log_term, error_term, flux_term,
    identity_residual, interior_log_term,
)
from ainftylab.elliptic import (  # noqa: F401
    BoundaryDensity, CoefficientField, GreenAtInfinity, bump_field,
    dkp_experiment, elliptic_measure_infinity, green_at_infinity,
    identity_field, oscillation_coefficient, solve_dirichlet, weak_dkp_norm,
)
