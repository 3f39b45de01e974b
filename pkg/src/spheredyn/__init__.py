"""Dynamics of chains of spherical links on (S^2)^n in four equivalent forms.

Euler-Lagrange equations in (q, qdot) and (q, omega), Hamilton's equations in
(q, mu) and (q, pi), fixed-step integrators with constraint repair, and
numerical checks of the variational principles behind them.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    CurveMismatch,
    DivergenceDetected,
    InsufficientSamples,
    InvalidParams,
    SingularInertia,
    SphereDynError,
    TangencyViolation,
)
from .geometry import Rep, SystemState, omega_from_qdot, qdot_from_omega, random_states, validate_state
from .hamiltonian import (
    dH_dq,
    ham_rhs_mu,
    ham_rhs_pi,
    inverse_legendre_mu,
    inverse_legendre_pi,
    legendre_mu,
    legendre_pi,
)
from .integrate import IntegratorSpec, Method, Repair, Trajectory, diagnostics_report, integrate
from .lagrangian import el_accel_omega, el_accel_qdot, kinetic_energy
from .library import (
    ChainForceParams,
    ChainPendulumParams,
    chain_forces,
    chain_pendulum,
    modulated_inertia_model,
    spherical_pendulum,
    tip_positions,
)
from .model import QuadraticModel
from .so3 import cross, dot, hat, outer, vee
from .variational import action, cross_form_agreement, dalembert_residual, el_residual_general, perturb_trajectory
