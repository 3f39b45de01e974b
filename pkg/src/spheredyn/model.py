"""Mechanical models with kinetic energy quadratic in the velocities.

The Lagrangian is

    L(q, qdot) = 1/2 sum_jk m_jk(q) qdot_j . qdot_k - U(q)

with scalar, symmetric inertia functions ``m_jk``. Derivatives of ``m`` and
``U`` may be supplied analytically; otherwise they are estimated by central
differences and projected onto the tangent planes.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import InvalidParams, SingularInertia
from .geometry import SystemState, project_tangent

ForceModel = Callable[[float, SystemState], np.ndarray]

FD_REL_STEP = 1e-6


class QuadraticModel:
    """Inertia functions, potential and their configuration gradients.

    Parameters
    ----------
    n : number of spheres.
    inertia : ``q -> (n, n)`` symmetric matrix of scalars ``m_jk(q)``.
    potential : ``q -> float``.
    inertia_grad : optional ``q -> (n, n, n, 3)`` array ``G`` with
        ``G[i, j, k] = d m_jk / d q_i``.
    potential_grad : optional ``q -> (n, 3)``.
    constant_inertia : declare ``m`` independent of ``q``; gradients are then
        identically zero and never evaluated.
    """

    def __init__(
        self,
        n: int,
        inertia: Callable[[np.ndarray], np.ndarray],
        potential: Callable[[np.ndarray], float],
        inertia_grad=None,
        potential_grad=None,
        constant_inertia: bool = False,
        name: str = "",
    ):
        if int(n) != n or n < 1:
            raise InvalidParams(f"number of spheres must be a positive integer, got {n!r}")
        self.n = int(n)
        self._inertia = inertia
        self._potential = potential
        self._inertia_grad = inertia_grad
        self._potential_grad = potential_grad
        self.constant_inertia = constant_inertia
        self.name = name

    def __repr__(self):
        return f"QuadraticModel(n={self.n}, name={self.name!r})"

    def inertia(self, q) -> np.ndarray:
        return np.asarray(self._inertia(q), dtype=float)

    def potential(self, q) -> float:
        return float(self._potential(q))

    def inertia_grad(self, q) -> np.ndarray:
        n = self.n
        if self.constant_inertia:
            return np.zeros((n, n, n, 3))
        if self._inertia_grad is not None:
            return np.asarray(self._inertia_grad(q), dtype=float)
        q = np.asarray(q, dtype=float)
        out = np.zeros((n, n, n, 3))
        for i in range(n):
            h = FD_REL_STEP * max(1.0, float(np.linalg.norm(q[i])))
            for a in range(3):
                qp, qm = q.copy(), q.copy()
                qp[i, a] += h
                qm[i, a] -= h
                out[i, :, :, a] = (self.inertia(qp) - self.inertia(qm)) / (2 * h)
        # d m / d q_i only acts through tangent directions
        return out - q[:, None, None, :] * np.einsum("ijka,ia->ijk", out, q)[..., None]

    def potential_grad(self, q) -> np.ndarray:
        if self._potential_grad is not None:
            return np.asarray(self._potential_grad(q), dtype=float)
        q = np.asarray(q, dtype=float)
        out = np.zeros_like(q)
        for i in range(self.n):
            h = FD_REL_STEP * max(1.0, float(np.linalg.norm(q[i])))
            for a in range(3):
                qp, qm = q.copy(), q.copy()
                qp[i, a] += h
                qm[i, a] -= h
                out[i, a] = (self.potential(qp) - self.potential(qm)) / (2 * h)
        return project_tangent(q, out)


def eval_forces(forces: ForceModel | None, t: float, state: SystemState) -> np.ndarray:
    if forces is None:
        return np.zeros_like(state.q)
    f = np.asarray(forces(t, state), dtype=float)
    if f.shape != state.q.shape:
        raise ValueError(f"force model returned shape {f.shape}, expected {state.q.shape}")
    return f


def zero_forces(t: float, state: SystemState) -> np.ndarray:
    return np.zeros_like(state.q)


def check_model(model: QuadraticModel, rng: np.random.Generator, samples: int = 20) -> None:
    """Spot-check symmetry and positive-definiteness of ``m(q)`` at random configurations.

    Raises :class:`SingularInertia` when the inertia matrix is not positive-definite
    and ``ValueError`` when it is not symmetric.
    """
    for _ in range(samples):
        q = rng.normal(size=(model.n, 3))
        q /= np.linalg.norm(q, axis=1, keepdims=True)
        m = model.inertia(q)
        if m.shape != (model.n, model.n):
            raise ValueError(f"inertia has shape {m.shape}, expected {(model.n, model.n)}")
        if not np.allclose(m, m.T, rtol=0, atol=1e-12 * max(1.0, np.abs(m).max())):
            raise ValueError("inertia matrix is not symmetric")
        try:
            np.linalg.cholesky(m)
        except np.linalg.LinAlgError:
            raise SingularInertia("inertia matrix is not positive-definite") from None
