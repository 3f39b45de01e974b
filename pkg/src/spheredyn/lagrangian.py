"""Euler-Lagrange right-hand sides in (q, qdot) and (q, omega).

Both forms solve one dense ``3n x 3n`` linear system per evaluation. The
array-level functions prefixed ``accel_`` skip validation and are what the
integrators call; the public ``el_accel_*`` wrappers validate their input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _assembly
from .geometry import STATE_TOL, Rep, SystemState, project_tangent, validate_state
from .errors import TangencyViolation
from .model import ForceModel, QuadraticModel, eval_forces
from .so3 import cross


@dataclass(frozen=True)
class AccelerationResult:
    second: np.ndarray  # (n, 3): qddot or omega_dot
    conditioning: float  # reciprocal condition number of the solved system


def _require(state: SystemState, rep: Rep, tol: float):
    if state.rep is not rep:
        raise ValueError(f"expected a {rep.name} state, got {state.rep.name}")
    problems = validate_state(state, tol)
    if problems:
        raise TangencyViolation("; ".join(map(str, problems)), time=state.t)


def config_forces_qdot(model: QuadraticModel, q, qdot) -> np.ndarray:
    """F_i = sum_j mdot_ij qdot_j - 1/2 d/dq_i sum_jk qdot_j^T m_jk qdot_k.

    The total derivative is expanded as mdot_ij = sum_k (d m_ij / d q_k) . qdot_k.
    """
    if model.constant_inertia:
        return np.zeros_like(q)
    dm = model.inertia_grad(q)
    mdot = np.einsum("kija,ka->ij", dm, qdot)
    gram = qdot @ qdot.T
    return mdot @ qdot - 0.5 * np.einsum("ijka,jk->ia", dm, gram)


def eval_F_qdot(model: QuadraticModel, state: SystemState) -> np.ndarray:
    return config_forces_qdot(model, state.q, state.v)


def eval_F_omega(model: QuadraticModel, state: SystemState) -> np.ndarray:
    """The configuration force of the angular-velocity form.

    It coincides with :func:`eval_F_qdot` at qdot_j = omega_j x q_j.
    """
    return config_forces_qdot(model, state.q, cross(state.v, state.q))


def accel_qdot(model: QuadraticModel, q, qdot, f) -> AccelerationResult:
    m = model.inertia(q)
    generalized = config_forces_qdot(model, q, qdot) + model.potential_grad(q) - f
    speed2 = np.sum(qdot * qdot, axis=1)
    rhs = -(m.diagonal() * speed2)[:, None] * q - project_tangent(q, generalized)
    x, rcond = _assembly.solve(_assembly.velocity_operator(q, m), rhs)
    return AccelerationResult(x, rcond)


def accel_omega(model: QuadraticModel, q, omega, f) -> AccelerationResult:
    m = model.inertia(q)
    qdot = cross(omega, q)
    generalized = config_forces_qdot(model, q, qdot) + model.potential_grad(q) - f
    speed2 = np.sum(omega * omega, axis=1)
    # sum_j m_ij |omega_j|^2 q_j, then S(q_i) applied row-wise
    centripetal = cross(q, (m * speed2[None, :]) @ q)
    rhs = centripetal - cross(q, generalized)
    x, rcond = _assembly.solve(_assembly.omega_operator(q, m), rhs)
    return AccelerationResult(x, rcond)


def el_accel_qdot(
    model: QuadraticModel, forces: ForceModel | None, state: SystemState, tol: float = STATE_TOL
) -> AccelerationResult:
    """Second derivatives qddot_i of the configuration.

    Solves m_ii qddot_i + P_i sum_{j!=i} m_ij qddot_j = -m_ii |qdot_i|^2 q_i
    - P_i (F_i + dU/dq_i - f_i), where P_i = I - q_i q_i^T.
    """
    _require(state, Rep.VELOCITY, tol)
    return accel_qdot(model, state.q, state.v, eval_forces(forces, state.t, state))


def el_accel_omega(
    model: QuadraticModel, forces: ForceModel | None, state: SystemState, tol: float = STATE_TOL
) -> AccelerationResult:
    """Angular accelerations omega_dot_i, each orthogonal to q_i."""
    _require(state, Rep.OMEGA, tol)
    return accel_omega(model, state.q, state.v, eval_forces(forces, state.t, state))


def kinetic_energy(model: QuadraticModel, state: SystemState) -> float:
    """Kinetic energy from a VELOCITY or OMEGA state."""
    m = model.inertia(state.q)
    if state.rep is Rep.VELOCITY:
        return 0.5 * float(np.sum(m * (state.v @ state.v.T)))
    if state.rep is Rep.OMEGA:
        w = state.v.reshape(-1)
        return 0.5 * float(w @ _assembly.omega_operator(state.q, m) @ w)
    raise ValueError(f"kinetic energy needs a velocity-type state, got {state.rep.name}")


def potential_energy(model: QuadraticModel, state: SystemState) -> float:
    return model.potential(state.q)


def lagrangian_value(model: QuadraticModel, state: SystemState) -> float:
    return kinetic_energy(model, state) - model.potential(state.q)
