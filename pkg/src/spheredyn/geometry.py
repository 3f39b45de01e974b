"""Points on the two-sphere, tangent vectors, and the state container.

A configuration of ``n`` links is an ``(n, 3)`` array whose rows are unit
vectors. Every representation of the system carries a companion ``(n, 3)``
array (velocity, angular velocity or one of the two momenta) whose rows are
orthogonal to the matching base point.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import TangencyViolation
from .so3 import cross, hat

STATE_TOL = 1e-9
KERNEL_TOL = 1e-12
# Below this rotation angle the Rodrigues coefficients switch to Taylor series.
SMALL_ANGLE = 1e-8


class Rep(enum.Enum):
    """Which companion vector a :class:`SystemState` carries."""

    VELOCITY = "qdot"
    OMEGA = "omega"
    MOMENTUM_MU = "mu"
    MOMENTUM_PI = "pi"

    @classmethod
    def parse(cls, name: str) -> "Rep":
        for rep in cls:
            if name.lower() in (rep.value, rep.name.lower()):
                return rep
        raise ValueError(f"unknown representation {name!r}")


def _rows(x) -> np.ndarray:
    return np.atleast_2d(np.asarray(x, dtype=float))


def _tangency_error(q, v) -> np.ndarray:
    q, v = _rows(q), _rows(v)
    return np.abs(np.einsum("ij,ij->i", q, v)) / np.maximum(1.0, np.linalg.norm(v, axis=1))


def _require_tangent(q, v, tol, what):
    err = _tangency_error(q, v)
    bad = np.nonzero(err > tol)[0]
    if bad.size:
        i = int(bad[0])
        raise TangencyViolation(f"{what} of link {i + 1} is not tangent (|q.v| = {err[i]:.3e})")


def project_tangent(q, v) -> np.ndarray:
    """Apply (I - q q^T) row-wise."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    return v - q * np.sum(q * v, axis=-1, keepdims=True)


def projector(q) -> np.ndarray:
    """The matrices I - q q^T for a stack of points, shape ``(..., 3, 3)``."""
    q = np.asarray(q, dtype=float)
    return np.eye(3) - q[..., :, None] * q[..., None, :]


def omega_from_qdot(q, qdot, tol: float = STATE_TOL) -> np.ndarray:
    """Angular velocity q x qdot, orthogonal to both q and qdot."""
    _require_tangent(q, qdot, tol, "velocity")
    return cross(np.asarray(q, dtype=float), np.asarray(qdot, dtype=float))


def qdot_from_omega(q, omega, tol: float = STATE_TOL) -> np.ndarray:
    """Velocity omega x q of a point rotating with angular velocity omega."""
    _require_tangent(q, omega, tol, "angular velocity")
    return cross(np.asarray(omega, dtype=float), np.asarray(q, dtype=float))


def expm_so3(a) -> np.ndarray:
    """exp(hat(a)) by Rodrigues' formula; works on stacks ``(..., 3)``."""
    a = np.asarray(a, dtype=float)
    theta = np.linalg.norm(a, axis=-1)[..., None, None]
    small = theta < SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    c1 = np.where(small, 1.0, np.sin(safe) / safe)
    c2 = np.where(small, 0.5, (1.0 - np.cos(safe)) / safe**2)
    s = hat(a)
    return np.eye(3) + c1 * s + c2 * (s @ s)


def left_jacobian(a) -> np.ndarray:
    """Matrix J with d/dt exp(hat(a)) = hat(J @ a_dot) @ exp(hat(a))."""
    a = np.asarray(a, dtype=float)
    theta = np.linalg.norm(a, axis=-1)[..., None, None]
    small = theta < 1e-4
    safe = np.where(small, 1.0, theta)
    t2 = theta**2
    c1 = np.where(small, 0.5 - t2 / 24.0, (1.0 - np.cos(safe)) / safe**2)
    c2 = np.where(small, 1.0 / 6.0 - t2 / 120.0, (safe - np.sin(safe)) / safe**3)
    s = hat(a)
    return np.eye(3) + c1 * s + c2 * (s @ s)


def exp_rotate(gamma, epsilon: float, q) -> np.ndarray:
    """Rotate ``q`` by exp(epsilon * hat(gamma)) and renormalize."""
    r = expm_so3(epsilon * np.asarray(gamma, dtype=float))
    out = np.einsum("...ij,...j->...i", r, np.asarray(q, dtype=float))
    return out / np.linalg.norm(out, axis=-1, keepdims=True)


def repair(q, v) -> tuple[np.ndarray, np.ndarray]:
    """Renormalize every base point, then project its companion vector."""
    q = np.asarray(q, dtype=float)
    q = q / np.linalg.norm(q, axis=-1, keepdims=True)
    return q, project_tangent(q, v)


@dataclass(frozen=True)
class SystemState:
    """``n`` base points with one companion vector each.

    ``q`` and ``v`` have shape ``(n, 3)``. The meaning of ``v`` is given by
    ``rep``. Construct through :meth:`checked` or :meth:`repaired` when the
    input is untrusted; the bare constructor does no validation.
    """

    q: np.ndarray
    v: np.ndarray
    rep: Rep
    t: float = 0.0

    @property
    def n(self) -> int:
        return self.q.shape[0]

    @classmethod
    def checked(cls, q, v, rep: Rep, t: float = 0.0, tol: float = STATE_TOL) -> "SystemState":
        state = cls(_rows(q).copy(), _rows(v).copy(), rep, float(t))
        problems = validate_state(state, tol)
        if problems:
            raise TangencyViolation("; ".join(str(p) for p in problems))
        return state

    @classmethod
    def repaired(cls, q, v, rep: Rep, t: float = 0.0) -> "SystemState":
        q, v = repair(_rows(q), _rows(v))
        return cls(q, v, rep, float(t))

    def replace(self, v=None, rep: Rep | None = None, q=None, t: float | None = None) -> "SystemState":
        return SystemState(
            self.q if q is None else np.asarray(q, dtype=float),
            self.v if v is None else np.asarray(v, dtype=float),
            self.rep if rep is None else rep,
            self.t if t is None else t,
        )


@dataclass(frozen=True)
class Violation:
    link: int  # 1-based link number
    kind: str  # "norm", "tangency" or "shape"
    error: float

    def __str__(self):
        return f"link {self.link}: {self.kind} error {self.error:.3e}"


def validate_state(state: SystemState, tol: float = STATE_TOL) -> list[Violation]:
    """Report every link whose unit-norm or tangency invariant exceeds ``tol``."""
    q, v = np.asarray(state.q, dtype=float), np.asarray(state.v, dtype=float)
    if q.ndim != 2 or q.shape[1] != 3 or v.shape != q.shape:
        return [Violation(0, "shape", float("nan"))]
    out = []
    norm_err = np.abs(np.linalg.norm(q, axis=1) - 1.0)
    tan_err = _tangency_error(q, v)
    for i in range(q.shape[0]):
        if not np.isfinite(norm_err[i]) or norm_err[i] > tol:
            out.append(Violation(i + 1, "norm", float(norm_err[i])))
        if not np.isfinite(tan_err[i]) or tan_err[i] > tol:
            out.append(Violation(i + 1, "tangency", float(tan_err[i])))
    return out


def constraint_errors(q, v) -> tuple[float, float]:
    """Max unit-norm error and max raw |q_i . v_i| over the links."""
    q, v = _rows(q), _rows(v)
    return (
        float(np.max(np.abs(np.linalg.norm(q, axis=1) - 1.0))),
        float(np.max(np.abs(np.einsum("ij,ij->i", q, v)))),
    )


def random_states(rng: np.random.Generator, n: int, scale: float = 1.0):
    """Random unit points and random tangent vectors of typical size ``scale``."""
    q = rng.normal(size=(n, 3))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    v = project_tangent(q, scale * rng.normal(size=(n, 3)))
    return q, v
