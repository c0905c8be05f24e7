"""Nonlinear k-quantum motional dynamics of a trapped atom.

Exact recoil-corrected couplings versus the Lamb-Dicke approximation,
analytic divergence bounds, and Husimi Q snapshots.
"""

__version__ = "0.1.0"

from .bounds import BoundProblem, divergence_time, solve_lower_bound, solve_upper_bound  # noqa: E402
from .dynamics import (  # noqa: E402
    CouplingTables,
    Mode,
    ModelConfig,
    MotionalState,
    Trajectory,
    TruncationBreach,
    coherent_state,
    evolve,
    fock_state,
    mean_n,
    spectral_oracle,
)
from .phasespace import QGrid, husimi_q, q_on_grid  # noqa: E402
from .specfun import (  # noqa: E402
    accel_coefficient,
    asymptotic_bound,
    bound_constant,
    coupling_magnitude,
    laguerre,
    ld_poly_coeffs,
    recoil_factor,
)
