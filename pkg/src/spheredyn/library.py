"""Ready-made models: the chain pendulum and its one-link special case.

The third inertial axis points up, so gravity pulls toward -e3 and the
hanging equilibrium is q_i = -e3 for every link.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidParams
from .geometry import SystemState
from .model import ForceModel, QuadraticModel
from .so3 import cross

E3 = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class ChainPendulumParams:
    masses: tuple
    lengths: tuple
    gravity: float = 9.81

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float).reshape(-1)
        l = np.asarray(self.lengths, dtype=float).reshape(-1)
        if m.size == 0:
            raise InvalidParams("a chain pendulum needs at least one link")
        if m.size != l.size:
            raise InvalidParams(f"{m.size} masses but {l.size} lengths")
        if not (np.all(np.isfinite(m)) and np.all(m > 0)):
            raise InvalidParams("masses must be finite and positive")
        if not (np.all(np.isfinite(l)) and np.all(l > 0)):
            raise InvalidParams("lengths must be finite and positive")
        if not (np.isfinite(self.gravity) and self.gravity >= 0):
            raise InvalidParams("gravity must be finite and non-negative")
        object.__setattr__(self, "masses", tuple(m.tolist()))
        object.__setattr__(self, "lengths", tuple(l.tolist()))
        object.__setattr__(self, "gravity", float(self.gravity))

    @property
    def n(self) -> int:
        return len(self.masses)


def inertia_constants(masses) -> np.ndarray:
    """M_ij = sum of m_k for k >= max(i, j): the mass outboard of both joints."""
    m = np.asarray(masses, dtype=float)
    tail = np.cumsum(m[::-1])[::-1]
    idx = np.arange(m.size)
    return tail[np.maximum.outer(idx, idx)]


def _gravity_weights(params: ChainPendulumParams) -> np.ndarray:
    tail = np.cumsum(np.asarray(params.masses)[::-1])[::-1]
    return tail * params.gravity * np.asarray(params.lengths)


def chain_pendulum(params: ChainPendulumParams) -> QuadraticModel:
    """Point masses at the tips of massless links joined by spherical joints.

    m_ij = M_ij l_i l_j (constant) and U = sum_i (sum_{j>=i} m_j) g l_i e3 . q_i.
    """
    l = np.asarray(params.lengths)
    m = inertia_constants(params.masses) * np.outer(l, l)
    m.setflags(write=False)
    w = _gravity_weights(params)
    grad = w[:, None] * E3

    return QuadraticModel(
        params.n,
        inertia=lambda q: m,
        potential=lambda q: float(w @ np.asarray(q)[:, 2]),
        potential_grad=lambda q: grad,
        constant_inertia=True,
        name=f"chain_pendulum(n={params.n})",
    )


def spherical_pendulum(m: float = 1.0, l: float = 1.0, g: float = 9.81) -> QuadraticModel:
    return chain_pendulum(ChainPendulumParams((m,), (l,), g))


def tip_positions(lengths, q) -> np.ndarray:
    """x_i = sum_{j<=i} l_j q_j."""
    return np.cumsum(np.asarray(lengths, dtype=float)[:, None] * np.asarray(q, dtype=float), axis=0)


def _as_signal(value) -> Callable[[float], np.ndarray]:
    if value is None:
        return lambda t: np.zeros(3)
    if callable(value):
        return lambda t: np.asarray(value(t), dtype=float)
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3,) or not np.all(np.isfinite(arr)):
        raise InvalidParams(f"expected a finite 3-vector, got {value!r}")
    return lambda t: arr


@dataclass(frozen=True)
class ChainForceParams:
    """Control torque at the base joint and disturbance at the last tip.

    Each is a constant 3-vector, a callable of time, or None for zero.
    """

    tau: object = None
    d: object = None
    _tau: Callable = field(init=False, repr=False, compare=False)
    _d: Callable = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_tau", _as_signal(self.tau))
        object.__setattr__(self, "_d", _as_signal(self.d))


def chain_forces(params: ChainForceParams, lengths) -> ForceModel:
    """Generalized forces f_1 = tau + l_1 S(q_1) d and f_j = l_j S(q_j) d for j >= 2."""
    l = np.asarray(lengths, dtype=float)

    def force(t: float, state: SystemState) -> np.ndarray:
        d = params._d(t)
        f = l[:, None] * cross(state.q, d)
        f[0] += params._tau(t)
        return f

    return force


def modulated_inertia_model(params: ChainPendulumParams, alpha: float = 0.3) -> QuadraticModel:
    """Chain pendulum whose inertia depends on configuration.

    m_jk(q) = s_j(q) M_jk l_j l_k s_k(q) with s_j = 1 + alpha e3 . q_j. It stays
    symmetric positive-definite for |alpha| < 1. It exercises the
    configuration-force terms that vanish for the plain chain.
    """
    if not abs(alpha) < 1:
        raise InvalidParams("alpha must satisfy |alpha| < 1")
    l = np.asarray(params.lengths)
    base = inertia_constants(params.masses) * np.outer(l, l)
    w = _gravity_weights(params)
    n = params.n

    def scales(q):
        return 1.0 + alpha * np.asarray(q)[:, 2]

    def inertia(q):
        s = scales(q)
        return s[:, None] * base * s[None, :]

    def inertia_grad(q):
        s = scales(q)
        out = np.zeros((n, n, n, 3))
        for i in range(n):
            # d s_i / d q_i = alpha e3
            out[i, i, :, 2] += alpha * base[i, :] * s
            out[i, :, i, 2] += alpha * base[:, i] * s
        return out

    return QuadraticModel(
        n,
        inertia=inertia,
        potential=lambda q: float(w @ np.asarray(q)[:, 2]),
        inertia_grad=inertia_grad,
        potential_grad=lambda q: w[:, None] * E3,
        name=f"modulated_inertia(n={n}, alpha={alpha})",
    )
