"""Action integrals, exponential-map variations and equation residuals.

A trajectory is perturbed link by link as q_i^eps = exp(eps S(gamma_i)) q_i
with curves gamma_i that vanish at both ends and stay orthogonal to q_i.
The Lagrange-d'Alembert residual compares the epsilon-derivative of the action
against the virtual work of the applied forces. It is zero on true solutions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate as quad

from . import _assembly
from .errors import CurveMismatch, InsufficientSamples
from .geometry import Rep, SystemState, expm_so3, left_jacobian, qdot_from_omega
from .hamiltonian import legendre_mu, legendre_pi
from .integrate import IntegratorSpec, Trajectory, energies, integrate
from .model import ForceModel, QuadraticModel, eval_forces
from .so3 import cross

CURVE_TOL = 1e-9
EPSILON = 1e-5
# steps of the nested central differences in el_residual_general
FD_SLOT_STEP = 1e-4
FD_TIME_STEP = 1e-4


class ActionForm(enum.Enum):
    L_QDOT = "l_qdot"
    L_OMEGA = "l_omega"
    PHASE_MU = "phase_mu"
    PHASE_PI = "phase_pi"


class Quadrature(enum.Enum):
    TRAPEZOID = "trapezoid"
    SIMPSON = "simpson"


@dataclass(frozen=True)
class ActionValue:
    value: float
    quadrature: Quadrature
    samples: int


def integrate_samples(y, t, quadrature: Quadrature = Quadrature.SIMPSON) -> float:
    """Composite quadrature of sampled values; needs at least three samples."""
    t = np.asarray(t, dtype=float)
    if len(t) < 3:
        raise InsufficientSamples(f"quadrature needs at least 3 samples, got {len(t)}")
    if quadrature is Quadrature.SIMPSON:
        return float(quad.simpson(y, x=t))
    return float(quad.trapezoid(y, x=t))


# -- sample conversions ----------------------------------------------------


def _stacked_inertia(model: QuadraticModel, qs) -> np.ndarray:
    if model.constant_inertia:
        return np.broadcast_to(model.inertia(qs[0]), (len(qs), model.n, model.n))
    return np.stack([model.inertia(q) for q in qs])


def sample_velocities(model: QuadraticModel, traj: Trajectory) -> np.ndarray:
    """qdot at every sample, whatever the trajectory's representation."""
    qs, vs = traj.q, traj.v
    if traj.rep is Rep.VELOCITY:
        return vs
    if traj.rep is Rep.OMEGA:
        return cross(vs, qs)
    op = _assembly.momentum_operator if traj.rep is Rep.MOMENTUM_MU else _assembly.omega_operator
    k = op(qs, _stacked_inertia(model, qs))
    w = np.linalg.solve(k, vs.reshape(len(qs), -1, 1)).reshape(vs.shape)
    if traj.rep is Rep.MOMENTUM_MU:
        return w - qs * np.sum(qs * w, axis=-1, keepdims=True)
    return cross(w, qs)


def _momenta(model: QuadraticModel, qs, qdot, rep: Rep) -> np.ndarray:
    m = _stacked_inertia(model, qs)
    if rep is Rep.MOMENTUM_MU:
        k, x = _assembly.velocity_operator(qs, m), qdot
    else:
        k, x = _assembly.omega_operator(qs, m), cross(qs, qdot)
    return np.einsum("sij,sj->si", k, x.reshape(len(qs), -1)).reshape(qs.shape)


# -- action ----------------------------------------------------------------


def lagrangian_samples(model: QuadraticModel, qs, qdot) -> np.ndarray:
    """L = 1/2 sum_jk m_jk qdot_j . qdot_k - U at every sample."""
    m = _stacked_inertia(model, qs)
    kinetic = 0.5 * np.einsum("sjk,sja,ska->s", m, qdot, qdot)
    return kinetic - np.array([model.potential(q) for q in qs])


def action(
    model: QuadraticModel,
    traj: Trajectory,
    form: ActionForm = ActionForm.L_QDOT,
    quadrature: Quadrature = Quadrature.SIMPSON,
) -> ActionValue:
    """Time integral of the Lagrangian, written in one of four equivalent ways.

    The phase-space forms integrate p . qdot - H with the momenta obtained
    from the sampled velocities (or taken from the trajectory when it already
    carries them).
    """
    if len(traj) < 3:
        raise InsufficientSamples(f"an action needs at least 3 samples, got {len(traj)}")
    qs = traj.q
    qdot = sample_velocities(model, traj)
    if form is ActionForm.L_QDOT:
        y = lagrangian_samples(model, qs, qdot)
    elif form is ActionForm.L_OMEGA:
        omega = traj.v if traj.rep is Rep.OMEGA else cross(qs, qdot)
        m = _stacked_inertia(model, qs)
        j = _assembly.omega_operator(qs, m)
        w = omega.reshape(len(qs), -1)
        y = 0.5 * np.einsum("si,sij,sj->s", w, j, w) - np.array([model.potential(q) for q in qs])
    else:
        rep = Rep.MOMENTUM_MU if form is ActionForm.PHASE_MU else Rep.MOMENTUM_PI
        p = traj.v if traj.rep is rep else _momenta(model, qs, qdot, rep)
        rate = qdot if rep is Rep.MOMENTUM_MU else cross(qs, qdot)
        y = np.einsum("sia,sia->s", p, rate) - energies(model, qs, p, rep)
    return ActionValue(integrate_samples(y, traj.t, quadrature), quadrature, len(traj))


# -- variations ------------------------------------------------------------


@dataclass(frozen=True)
class VariationCurve:
    """Sampled gamma_i(t) and its time derivative on a trajectory's grid."""

    t: np.ndarray
    gamma: np.ndarray  # (samples, n, 3)
    gamma_dot: np.ndarray
    epsilon: float = EPSILON

    def check(self, traj: Trajectory, tol: float = CURVE_TOL) -> None:
        """Raise CurveMismatch unless the curve fits ``traj``."""
        if self.gamma.shape != traj.q.shape or self.gamma_dot.shape != traj.q.shape:
            raise CurveMismatch(f"curve shape {self.gamma.shape} does not match trajectory {traj.q.shape}")
        if not np.array_equal(self.t, traj.t):
            raise CurveMismatch("curve and trajectory use different time grids")
        ends = float(np.abs(self.gamma[[0, -1]]).max())
        if ends > tol:
            raise CurveMismatch(f"curve does not vanish at the end points ({ends:.3e})")
        normal = float(np.abs(np.einsum("sia,sia->s", self.gamma, traj.q)).max())
        if normal > tol:
            raise CurveMismatch(f"curve is not orthogonal to q ({normal:.3e})")

    def variation(self, traj: Trajectory) -> np.ndarray:
        """First-order displacement delta q_i = gamma_i x q_i."""
        return cross(self.gamma, traj.q)


def variation_curve(traj: Trajectory, qdot, c, epsilon: float = EPSILON) -> VariationCurve:
    """gamma_i(t) = sin(pi (t - t0) / T) (I - q_i q_i^T) c_i for fixed vectors c_i."""
    t = traj.t
    span = t[-1] - t[0]
    phase = np.pi * (t - t[0]) / span
    s = np.sin(phase)[:, None, None]
    sdot = (np.pi / span * np.cos(phase))[:, None, None]
    # force the end points to exact zeros rather than sin(pi) ~ 1e-16
    s[[0, -1]] = 0.0
    qs = traj.q
    c = np.broadcast_to(np.asarray(c, dtype=float), qs.shape)
    qc = np.sum(qs * c, axis=-1, keepdims=True)
    pc = c - qs * qc
    # d/dt (I - q q^T) c = -(qdot q^T + q qdot^T) c
    dpc = -(qdot * qc + qs * np.sum(qdot * c, axis=-1, keepdims=True))
    return VariationCurve(t.copy(), s * pc, sdot * pc + s * dpc, epsilon)


def random_variation_curves(
    model: QuadraticModel, traj: Trajectory, rng: np.random.Generator, count: int, epsilon: float = EPSILON
) -> list[VariationCurve]:
    if len(traj) < 2 or traj.t[-1] == traj.t[0]:
        raise InsufficientSamples("variation curves need a trajectory of positive duration")
    qdot = sample_velocities(model, traj)
    return [variation_curve(traj, qdot, rng.normal(size=traj.q.shape[1:]), epsilon) for _ in range(count)]


def perturb_trajectory(
    traj: Trajectory,
    curve: VariationCurve,
    epsilon: float | None = None,
    *,
    qdot=None,
    velocity: str = "analytic",
) -> Trajectory:
    """The trajectory q_i^eps(t) = exp(eps S(gamma_i(t))) q_i(t).

    The result is a VELOCITY trajectory. Its velocities come from
    differentiating the exponential exactly (``"analytic"``) or from second
    order finite differences of the perturbed positions (``"fd"``). ``qdot``
    must be given unless ``traj`` already carries velocities. Energy and
    constraint diagnostics of the result are left as NaN.
    """
    curve.check(traj)
    eps = curve.epsilon if epsilon is None else float(epsilon)
    if qdot is None:
        if traj.rep is Rep.VELOCITY:
            qdot = traj.v
        elif traj.rep is Rep.OMEGA:
            qdot = cross(traj.v, traj.q)
        else:
            raise CurveMismatch("pass qdot explicitly for a momentum trajectory")
    a = eps * curve.gamma
    rot = expm_so3(a)
    q_eps = np.einsum("...ij,...j->...i", rot, traj.q)
    if velocity == "analytic":
        # d/dt exp(S(a)) q = S(J_l(a) a_dot) exp(S(a)) q + exp(S(a)) qdot
        spin = np.einsum("...ij,...j->...i", left_jacobian(a), eps * curve.gamma_dot)
        v_eps = cross(spin, q_eps) + np.einsum("...ij,...j->...i", rot, qdot)
    elif velocity == "fd":
        v_eps = np.gradient(q_eps, traj.t, axis=0, edge_order=2)
    else:
        raise ValueError(f"unknown velocity mode {velocity!r}")
    nan = np.full(len(traj), np.nan)
    return Trajectory(Rep.VELOCITY, traj.t.copy(), q_eps, v_eps, nan, nan.copy(), nan.copy())


# -- Lagrange-d'Alembert ---------------------------------------------------


def force_samples(forces: ForceModel | None, traj: Trajectory) -> np.ndarray:
    if forces is None:
        return np.zeros_like(traj.q)
    return np.stack([eval_forces(forces, float(t), traj.state(k)) for k, t in enumerate(traj.t)])


def dalembert_residual(
    model: QuadraticModel,
    forces: ForceModel | None,
    traj: Trajectory,
    curves: Sequence[VariationCurve],
    quadrature: Quadrature = Quadrature.SIMPSON,
) -> float:
    """max over curves of |d/d eps action(eps) at 0 + virtual work|.

    The derivative is a central difference with each curve's epsilon. The
    virtual work is the time integral of sum_i f_i . (gamma_i x q_i).
    """
    if len(traj) < 2 or traj.t[-1] == traj.t[0]:
        return 0.0
    qdot = sample_velocities(model, traj)
    f = force_samples(forces, traj)
    worst = 0.0
    for curve in curves:
        eps = curve.epsilon
        plus = perturb_trajectory(traj, curve, eps, qdot=qdot)
        minus = perturb_trajectory(traj, curve, -eps, qdot=qdot)
        lp = lagrangian_samples(model, plus.q, plus.v)
        lm = lagrangian_samples(model, minus.q, minus.v)
        d_action = integrate_samples((lp - lm) / (2 * eps), traj.t, quadrature)
        work = integrate_samples(np.einsum("sia,sia->s", f, curve.variation(traj)), traj.t, quadrature)
        worst = max(worst, abs(d_action + work))
    return worst


def frozen_trajectory(traj: Trajectory) -> Trajectory:
    """Every sample pinned to the initial configuration with zero velocity."""
    q = np.broadcast_to(traj.q[0], traj.q.shape).copy()
    zeros = np.zeros(len(traj))
    return Trajectory(Rep.VELOCITY, traj.t.copy(), q, np.zeros_like(q), zeros, zeros.copy(), zeros.copy())


# -- four-way agreement ----------------------------------------------------


@dataclass
class Agreement:
    divergence: float
    t: np.ndarray
    divergence_vs_time: np.ndarray
    trajectories: dict


def initial_states(model: QuadraticModel, state: SystemState) -> dict:
    """The same physical state in all four representations, from q and omega."""
    if state.rep is not Rep.OMEGA:
        raise ValueError(f"expected an OMEGA state, got {state.rep.name}")
    velocity = state.replace(v=qdot_from_omega(state.q, state.v), rep=Rep.VELOCITY)
    return {
        Rep.VELOCITY: velocity,
        Rep.OMEGA: state,
        Rep.MOMENTUM_MU: legendre_mu(model, velocity),
        Rep.MOMENTUM_PI: legendre_pi(model, state),
    }


def pairwise_divergence(trajectories: Sequence[Trajectory]) -> np.ndarray:
    """max over pairs and links of |q_i^a(t) - q_i^b(t)| at every sample."""
    qs = [tr.q for tr in trajectories]
    out = np.zeros(len(qs[0]))
    for a in range(len(qs)):
        for b in range(a + 1, len(qs)):
            out = np.maximum(out, np.linalg.norm(qs[a] - qs[b], axis=-1).max(axis=1))
    return out


def cross_form_agreement(
    model: QuadraticModel,
    forces: ForceModel | None,
    initial: SystemState,
    spec: IntegratorSpec,
    dh_method: str = "analytic",
) -> Agreement:
    """Integrate all four formulations from one (q, omega) state and compare q."""
    starts = initial_states(model, initial)
    runs = {rep: integrate(model, s, spec, forces, dh_method=dh_method) for rep, s in starts.items()}
    div = pairwise_divergence(list(runs.values()))
    return Agreement(float(div.max()), runs[Rep.OMEGA].t, div, runs)


# -- general Euler-Lagrange residual ---------------------------------------


def _slot_gradient(fn: Callable, x: np.ndarray, step: float) -> np.ndarray:
    out = np.zeros_like(x)
    for idx in np.ndindex(*x.shape):
        xp, xm = x.copy(), x.copy()
        xp[idx] += step
        xm[idx] -= step
        out[idx] = (fn(xp) - fn(xm)) / (2 * step)
    return out


def projected_residual(q, momentum_rate, dL_dq, f) -> np.ndarray:
    """(I - q_i q_i^T)(d/dt dL/dqdot_i - dL/dq_i - f_i) row by row."""
    r = np.asarray(momentum_rate) - np.asarray(dL_dq) - np.asarray(f)
    return r - q * np.sum(q * r, axis=-1, keepdims=True)


def el_residual_general(
    lagrangian: Callable[[np.ndarray, np.ndarray], float],
    state: SystemState,
    accel,
    f=None,
    slot_step: float = FD_SLOT_STEP,
    time_step: float = FD_TIME_STEP,
) -> np.ndarray:
    """Residual of the general Euler-Lagrange equations on (S^2)^n.

    ``lagrangian(q, qdot)`` is any scalar function of two ``(n, 3)`` arrays.
    dL/dqdot and dL/dq come from central differences; the time derivative of
    dL/dqdot is a central difference along (qdot, accel).
    """
    if state.rep is not Rep.VELOCITY:
        raise ValueError(f"expected a VELOCITY state, got {state.rep.name}")
    q, qdot = np.asarray(state.q, dtype=float), np.asarray(state.v, dtype=float)
    accel = np.asarray(accel, dtype=float)
    f = np.zeros_like(q) if f is None else np.asarray(f, dtype=float)

    def momentum(qq, vv):
        return _slot_gradient(lambda x: lagrangian(qq, x), vv, slot_step)

    ahead = momentum(q + time_step * qdot, qdot + time_step * accel)
    behind = momentum(q - time_step * qdot, qdot - time_step * accel)
    rate = (ahead - behind) / (2 * time_step)
    dL_dq = _slot_gradient(lambda x: lagrangian(x, qdot), q, slot_step)
    return projected_residual(q, rate, dL_dq, f)


def quadratic_lagrangian(model: QuadraticModel) -> Callable[[np.ndarray, np.ndarray], float]:
    def lagrangian(q, qdot):
        return 0.5 * float(np.sum(model.inertia(q) * (qdot @ qdot.T))) - model.potential(q)

    return lagrangian
