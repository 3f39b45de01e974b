"""Fixed-step explicit integration of any of the four formulations."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import hamiltonian, lagrangian
from .errors import DivergenceDetected, SingularInertia, SphereDynError
from .geometry import Rep, SystemState, repair
from .model import ForceModel, QuadraticModel, eval_forces
from .so3 import cross

DIVERGENCE_LIMIT = 1e8

VectorField = Callable[[float, np.ndarray, np.ndarray], tuple]


class Method(enum.Enum):
    RK4 = "rk4"
    HEUN = "heun"
    EULER = "euler"


class Repair(enum.Enum):
    PROJECT = "project"
    NONE = "none"


@dataclass(frozen=True)
class IntegratorSpec:
    method: Method = Method.RK4
    step: float = 1e-3
    horizon: float = 1.0
    repair: Repair = Repair.PROJECT

    def __post_init__(self):
        if isinstance(self.method, str):
            object.__setattr__(self, "method", Method(self.method.lower()))
        if isinstance(self.repair, str):
            object.__setattr__(self, "repair", Repair(self.repair.lower()))
        if not (math.isfinite(self.step) and self.step > 0):
            raise ValueError(f"step must be positive, got {self.step}")
        if not (math.isfinite(self.horizon) and self.horizon >= 0):
            raise ValueError(f"horizon must be non-negative, got {self.horizon}")
        # horizon == 0 is allowed and yields the initial sample only
        if self.horizon > 0 and self.step > self.horizon:
            raise ValueError(f"step {self.step} exceeds horizon {self.horizon}")

    @property
    def steps(self) -> int:
        return int(math.floor(self.horizon / self.step + 1e-9))


@dataclass
class Trajectory:
    """Sampled states in one representation plus per-sample diagnostics.

    ``q`` and ``v`` have shape ``(samples, n, 3)``.
    """

    rep: Rep
    t: np.ndarray
    q: np.ndarray
    v: np.ndarray
    energy: np.ndarray
    norm_error: np.ndarray
    tangency_error: np.ndarray

    def __len__(self):
        return len(self.t)

    def state(self, k: int) -> SystemState:
        return SystemState(self.q[k], self.v[k], self.rep, float(self.t[k]))

    @property
    def final(self) -> SystemState:
        return self.state(-1)


def vector_field(
    model: QuadraticModel, forces: ForceModel | None, rep: Rep, dh_method: str = "analytic"
) -> VectorField:
    """Right-hand side ``(t, q, v) -> (dq/dt, dv/dt)`` for the given representation."""

    def f_at(t, q, v):
        if forces is None:
            return np.zeros_like(q)
        return eval_forces(forces, t, SystemState(q, v, rep, t))

    if rep is Rep.VELOCITY:

        def field(t, q, v):
            return v, lagrangian.accel_qdot(model, q, v, f_at(t, q, v)).second

    elif rep is Rep.OMEGA:

        def field(t, q, v):
            return cross(v, q), lagrangian.accel_omega(model, q, v, f_at(t, q, v)).second

    elif rep is Rep.MOMENTUM_MU:

        def field(t, q, v):
            return hamiltonian.rates_mu(model, q, v, f_at(t, q, v), dh_method)

    else:

        def field(t, q, v):
            return hamiltonian.rates_pi(model, q, v, f_at(t, q, v), dh_method)

    return field


def step_rk4(field: VectorField, t, q, v, h):
    k1q, k1v = field(t, q, v)
    k2q, k2v = field(t + h / 2, q + h / 2 * k1q, v + h / 2 * k1v)
    k3q, k3v = field(t + h / 2, q + h / 2 * k2q, v + h / 2 * k2v)
    k4q, k4v = field(t + h, q + h * k3q, v + h * k3v)
    return (
        q + h / 6 * (k1q + 2 * k2q + 2 * k3q + k4q),
        v + h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v),
    )


def step_heun(field: VectorField, t, q, v, h):
    k1q, k1v = field(t, q, v)
    k2q, k2v = field(t + h, q + h * k1q, v + h * k1v)
    return q + h / 2 * (k1q + k2q), v + h / 2 * (k1v + k2v)


def step_euler(field: VectorField, t, q, v, h):
    kq, kv = field(t, q, v)
    return q + h * kq, v + h * kv


STEPPERS = {Method.RK4: step_rk4, Method.HEUN: step_heun, Method.EULER: step_euler}


def energy_of(model: QuadraticModel, q, v, rep: Rep) -> float:
    """Total energy T + U evaluated in the state's own representation."""
    if rep in (Rep.MOMENTUM_MU, Rep.MOMENTUM_PI):
        return hamiltonian.hamiltonian_value(model, q, v, rep)
    state = SystemState(q, v, rep)
    return lagrangian.kinetic_energy(model, state) + model.potential(q)


def energies(model: QuadraticModel, qs, vs, rep: Rep) -> np.ndarray:
    """:func:`energy_of` for a stack of samples ``(samples, n, 3)`` in one pass."""
    qs = np.asarray(qs, dtype=float)
    vs = np.asarray(vs, dtype=float)
    if model.constant_inertia:
        m = np.broadcast_to(model.inertia(qs[0]), (len(qs), model.n, model.n))
    else:
        m = np.stack([model.inertia(q) for q in qs])
    potential = np.array([model.potential(q) for q in qs])
    if rep in (Rep.MOMENTUM_MU, Rep.MOMENTUM_PI):
        k = hamiltonian._operator(rep)(qs, m)
        try:
            w = np.linalg.solve(k, vs.reshape(len(qs), -1, 1))[..., 0]
        except np.linalg.LinAlgError:
            raise SingularInertia("inertia system is exactly singular") from None
        return 0.5 * np.einsum("si,si->s", vs.reshape(len(qs), -1), w) + potential
    qdot = vs if rep is Rep.VELOCITY else cross(vs, qs)
    return 0.5 * np.einsum("sjk,sja,ska->s", m, qdot, qdot) + potential


def integrate(
    model: QuadraticModel,
    initial: SystemState,
    spec: IntegratorSpec,
    forces: ForceModel | None = None,
    *,
    field: VectorField | None = None,
    dh_method: str = "analytic",
) -> Trajectory:
    """Integrate from ``initial`` for ``spec.horizon`` seconds.

    The representation (and hence the equations) follows ``initial.rep``
    unless an explicit ``field`` is given. Numerical failures are re-raised
    with the time of the step that produced them.
    """
    rep = initial.rep
    if field is None:
        field = vector_field(model, forces, rep, dh_method)
    stepper = STEPPERS[spec.method]
    h = spec.step
    steps = spec.steps
    n = initial.n

    t = initial.t + h * np.arange(steps + 1)
    qs = np.empty((steps + 1, n, 3))
    vs = np.empty((steps + 1, n, 3))

    q = np.array(initial.q, dtype=float)
    v = np.array(initial.v, dtype=float)
    for k in range(steps + 1):
        if k > 0:
            try:
                q, v = stepper(field, t[k - 1], q, v, h)
            except SphereDynError as exc:
                exc.time = float(t[k - 1])
                raise
            # NaN fails the comparison as well; builtin max() would drop it
            if not (np.abs(q).max() <= DIVERGENCE_LIMIT and np.abs(v).max() <= DIVERGENCE_LIMIT):
                raise DivergenceDetected("state left the finite range", time=float(t[k]))
            if spec.repair is Repair.PROJECT:
                q, v = repair(q, v)
        qs[k] = q
        vs[k] = v
    norm_err = np.abs(np.linalg.norm(qs, axis=2) - 1.0).max(axis=1)
    tan_err = np.abs(np.einsum("sia,sia->si", qs, vs)).max(axis=1)
    energy = energies(model, qs, vs, rep)
    return Trajectory(rep, t, qs, vs, energy, norm_err, tan_err)


@dataclass(frozen=True)
class DiagnosticsSummary:
    samples: int
    max_energy_drift: float
    mean_energy_drift: float
    max_relative_drift: float
    max_norm_error: float
    max_tangency_error: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def diagnostics_report(traj: Trajectory) -> DiagnosticsSummary:
    drift = np.abs(traj.energy - traj.energy[0])
    return DiagnosticsSummary(
        samples=len(traj),
        max_energy_drift=float(drift.max()),
        mean_energy_drift=float(drift.mean()),
        max_relative_drift=float(drift.max() / max(1.0, abs(traj.energy[0]))),
        max_norm_error=float(traj.norm_error.max()),
        max_tangency_error=float(traj.tangency_error.max()),
    )
