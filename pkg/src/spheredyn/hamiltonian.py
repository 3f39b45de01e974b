"""Legendre transforms, Hamiltonians and Hamilton's equations in (q, mu) and (q, pi).

The inverse-inertia blocks are never formed. Applying them means solving the
forward Legendre system, whose matrix is the symmetric kinetic matrix

* mu form: diagonal blocks m_ii I, off-diagonal blocks m_ij P_i P_j,
* pi form: diagonal blocks m_ii I, off-diagonal blocks m_ij S(q_i)^T S(q_j).

Both are defined for every q in R^{3n}. That gives H a definite extension
off the constraint manifold. The configuration gradient dH/dq holds the
momenta fixed and is evaluated either in closed form
(-1/2 v^T (dK/dq) v with v = K^{-1} p, plus dU/dq) or by central
differences of H. Both compute the same derivative.
"""

from __future__ import annotations

import numpy as np

from . import _assembly
from .errors import TangencyViolation
from .geometry import STATE_TOL, Rep, SystemState, project_tangent, validate_state
from .model import ForceModel, QuadraticModel, eval_forces
from .so3 import cross

DH_FD_STEP = 1e-6
DH_METHODS = ("analytic", "fd")


def _require(state: SystemState, rep: Rep, tol: float):
    if state.rep is not rep:
        raise ValueError(f"expected a {rep.name} state, got {state.rep.name}")
    problems = validate_state(state, tol)
    if problems:
        raise TangencyViolation("; ".join(map(str, problems)), time=state.t)


def _operator(rep: Rep):
    if rep is Rep.MOMENTUM_MU:
        return _assembly.momentum_operator
    if rep is Rep.MOMENTUM_PI:
        return _assembly.omega_operator
    raise ValueError(f"not a momentum representation: {rep.name}")


def apply_inverse_inertia(model: QuadraticModel, q, p, rep: Rep) -> np.ndarray:
    """Action of the inverse-inertia blocks on stacked momenta ``p``.

    Returns dH/dp: the velocity for ``MOMENTUM_MU``, the angular velocity for
    ``MOMENTUM_PI``.
    """
    v, _ = _assembly.solve(_operator(rep)(q, model.inertia(q)), p)
    return v


# -- Legendre transforms ---------------------------------------------------


def legendre_mu(model: QuadraticModel, state: SystemState, tol: float = STATE_TOL) -> SystemState:
    """mu_i = m_ii qdot_i + P_i sum_{j!=i} m_ij qdot_j."""
    _require(state, Rep.VELOCITY, tol)
    q = state.q
    k = _assembly.velocity_operator(q, model.inertia(q))
    mu = (k @ state.v.reshape(-1)).reshape(-1, 3)
    return state.replace(v=mu, rep=Rep.MOMENTUM_MU)


def inverse_legendre_mu(model: QuadraticModel, state: SystemState, tol: float = STATE_TOL) -> SystemState:
    _require(state, Rep.MOMENTUM_MU, tol)
    v = apply_inverse_inertia(model, state.q, state.v, Rep.MOMENTUM_MU)
    return state.replace(v=project_tangent(state.q, v), rep=Rep.VELOCITY)


def legendre_pi(model: QuadraticModel, state: SystemState, tol: float = STATE_TOL) -> SystemState:
    """pi_i = m_ii omega_i + sum_{j!=i} S(q_i)^T m_ij S(q_j) omega_j."""
    _require(state, Rep.OMEGA, tol)
    q = state.q
    j = _assembly.omega_operator(q, model.inertia(q))
    pi = (j @ state.v.reshape(-1)).reshape(-1, 3)
    return state.replace(v=pi, rep=Rep.MOMENTUM_PI)


def inverse_legendre_pi(model: QuadraticModel, state: SystemState, tol: float = STATE_TOL) -> SystemState:
    _require(state, Rep.MOMENTUM_PI, tol)
    w = apply_inverse_inertia(model, state.q, state.v, Rep.MOMENTUM_PI)
    return state.replace(v=project_tangent(state.q, w), rep=Rep.OMEGA)


# -- Hamiltonians ----------------------------------------------------------


def hamiltonian_value(model: QuadraticModel, q, p, rep: Rep) -> float:
    """1/2 p . (K^{-1} p) + U(q), no validation (used for finite differences)."""
    v = apply_inverse_inertia(model, q, p, rep)
    return 0.5 * float(np.sum(p * v)) + model.potential(q)


def hamiltonian_mu(model: QuadraticModel, state: SystemState, tol: float = STATE_TOL) -> float:
    _require(state, Rep.MOMENTUM_MU, tol)
    return hamiltonian_value(model, state.q, state.v, Rep.MOMENTUM_MU)


def hamiltonian_pi(model: QuadraticModel, state: SystemState, tol: float = STATE_TOL) -> float:
    _require(state, Rep.MOMENTUM_PI, tol)
    return hamiltonian_value(model, state.q, state.v, Rep.MOMENTUM_PI)


def hamiltonian(model: QuadraticModel, state: SystemState, tol: float = STATE_TOL) -> float:
    if state.rep is Rep.MOMENTUM_MU:
        return hamiltonian_mu(model, state, tol)
    return hamiltonian_pi(model, state, tol)


# -- configuration gradient ------------------------------------------------


def _kinetic_q_gradient(model: QuadraticModel, q, v, rep: Rep) -> np.ndarray:
    """d/dq of v^T K(q) v with v held fixed, shape (n, 3)."""
    m = model.inertia(q)
    n = model.n
    off = m.copy()
    np.fill_diagonal(off, 0.0)
    if rep is Rep.MOMENTUM_MU:
        # K_jk = m_jk P_j P_k off the diagonal, P_j v_j =: a_j
        qv = np.sum(q * v, axis=1)
        a = v - q * qv[:, None]
        # derivative of a_i wrt q_i, transposed, applied to c: -(q_i.v_i) c - v_i (q_i.c)
        c = off @ a
        grad = 2.0 * (-qv[:, None] * c - v * np.sum(q * c, axis=1, keepdims=True))
        pair = a @ a.T
    else:
        # K_jk = m_jk S(q_j)^T S(q_k) off the diagonal, S(q_j) w_j =: b_j
        b = cross(q, v)
        grad = 2.0 * cross(v, off @ b)
        pair = b @ b.T
    if not model.constant_inertia:
        np.fill_diagonal(pair, np.sum(v * v, axis=1))
        grad = grad + np.einsum("ijka,jk->ia", model.inertia_grad(q), pair)
    return grad.reshape(n, 3)


def _dH_dq_arrays(model: QuadraticModel, q, p, rep: Rep, method: str = "analytic", step: float = DH_FD_STEP):
    if method == "analytic":
        v = apply_inverse_inertia(model, q, p, rep)
        return -0.5 * _kinetic_q_gradient(model, q, v, rep) + model.potential_grad(q)
    if method == "fd":
        # momenta held fixed as raw 3-vectors; perturbed q_i is not renormalized
        out = np.zeros_like(q)
        for i in range(q.shape[0]):
            for a in range(3):
                qp, qm = q.copy(), q.copy()
                qp[i, a] += step
                qm[i, a] -= step
                out[i, a] = (hamiltonian_value(model, qp, p, rep) - hamiltonian_value(model, qm, p, rep)) / (2 * step)
        return out
    raise ValueError(f"unknown dH/dq method {method!r}; expected one of {DH_METHODS}")


def dH_dq(
    model: QuadraticModel,
    state: SystemState,
    i: int | None = None,
    method: str = "analytic",
    step: float = DH_FD_STEP,
) -> np.ndarray:
    """Ambient gradient of H with respect to q (all links, or link index ``i``)."""
    if state.rep not in (Rep.MOMENTUM_MU, Rep.MOMENTUM_PI):
        raise ValueError(f"expected a momentum state, got {state.rep.name}")
    g = _dH_dq_arrays(model, state.q, state.v, state.rep, method, step)
    return g if i is None else g[i]


# -- Hamilton's equations --------------------------------------------------


def rates_mu(model: QuadraticModel, q, mu, f, method: str = "analytic"):
    v = apply_inverse_inertia(model, q, mu, Rep.MOMENTUM_MU)
    if method == "analytic":
        grad = -0.5 * _kinetic_q_gradient(model, q, v, Rep.MOMENTUM_MU) + model.potential_grad(q)
    else:
        grad = _dH_dq_arrays(model, q, mu, Rep.MOMENTUM_MU, method)
    qdot = project_tangent(q, v)
    mudot = -project_tangent(q, grad - f) + cross(v, cross(mu, q))
    return qdot, mudot


def rates_pi(model: QuadraticModel, q, pi, f, method: str = "analytic"):
    w = apply_inverse_inertia(model, q, pi, Rep.MOMENTUM_PI)
    if method == "analytic":
        grad = -0.5 * _kinetic_q_gradient(model, q, w, Rep.MOMENTUM_PI) + model.potential_grad(q)
    else:
        grad = _dH_dq_arrays(model, q, pi, Rep.MOMENTUM_PI, method)
    qdot = -cross(q, w)
    pidot = -cross(q, grad) + cross(w, pi) + cross(q, f)
    return qdot, pidot


def ham_rhs_mu(
    model: QuadraticModel,
    forces: ForceModel | None,
    state: SystemState,
    method: str = "analytic",
    tol: float = STATE_TOL,
):
    """(qdot, mudot) with qdot_i = P_i dH/dmu_i and
    mudot_i = -P_i (dH/dq_i - f_i) + dH/dmu_i x (mu_i x q_i)."""
    _require(state, Rep.MOMENTUM_MU, tol)
    return rates_mu(model, state.q, state.v, eval_forces(forces, state.t, state), method)


def ham_rhs_pi(
    model: QuadraticModel,
    forces: ForceModel | None,
    state: SystemState,
    method: str = "analytic",
    tol: float = STATE_TOL,
):
    """(qdot, pidot) with qdot_i = -S(q_i) dH/dpi_i and
    pidot_i = -S(q_i) dH/dq_i + dH/dpi_i x pi_i + S(q_i) f_i."""
    _require(state, Rep.MOMENTUM_PI, tol)
    return rates_pi(model, state.q, state.v, eval_forces(forces, state.t, state), method)
