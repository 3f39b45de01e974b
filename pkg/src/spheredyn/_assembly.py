"""Block-matrix assembly and dense solves shared by the dynamics modules.

Operators are ``(3n, 3n)`` arrays whose ``(i, j)`` block is the 3x3 matrix
coupling link ``i`` to link ``j``. They are built by broadcasting over a
``(..., n, 3, n, 3)`` view, which is much cheaper than per-block assembly for
the small ``n`` this package targets. Leading batch axes of ``q`` (..., n, 3)
and ``m`` (..., n, n) carry through.
"""

from __future__ import annotations

import numpy as np

from .errors import SingularInertia

COND_LIMIT = 1e14


def _finish(a4: np.ndarray, q, m) -> np.ndarray:
    # the block formulas below all give m_ii P_i on the diagonal; lift that to m_ii I
    n = m.shape[-1]
    d = m.diagonal(0, -2, -1)[..., :, None] * q
    a4 = a4 + np.eye(n)[:, None, :, None] * d[..., :, :, None, None] * q[..., None, None, :, :]
    return a4.reshape(a4.shape[:-4] + (3 * n, 3 * n))


def velocity_operator(q, m) -> np.ndarray:
    """Diagonal blocks m_ii I, off-diagonal blocks m_ij (I - q_i q_i^T).

    Left-hand operator of the (q, qdot) Euler-Lagrange equations. Not symmetric.
    """
    p = np.eye(3) - q[..., :, :, None] * q[..., :, None, :]
    a4 = p[..., :, :, None, :] * m[..., :, None, :, None]
    return _finish(a4, q, m)


def momentum_operator(q, m) -> np.ndarray:
    """Diagonal blocks m_ii I, off-diagonal blocks m_ij P_i P_j.

    Symmetric; equal to :func:`velocity_operator` on tangent vectors, which
    makes it the kinetic matrix behind H(q, mu).
    """
    # P_i P_j = I - q_i q_i^T - q_j q_j^T + (q_i . q_j) q_i q_j^T
    g = q @ np.swapaxes(q, -1, -2)
    outer = q[..., :, :, None] * q[..., :, None, :]
    a4 = (
        np.eye(3)[:, None, :]
        - outer[..., :, :, None, :]
        - np.swapaxes(outer, -3, -2)[..., None, :, :, :]
        + g[..., :, None, :, None] * q[..., :, :, None, None] * q[..., None, None, :, :]
    ) * m[..., :, None, :, None]
    return _finish(a4, q, m)


def omega_operator(q, m) -> np.ndarray:
    """Diagonal blocks m_ii I, off-diagonal blocks m_ij S(q_i)^T S(q_j). Symmetric."""
    # S(q_i)^T S(q_j) = (q_i . q_j) I - q_j q_i^T
    g = q @ np.swapaxes(q, -1, -2)
    a4 = g[..., :, None, :, None] * np.eye(3)[:, None, :] - (
        np.swapaxes(q, -1, -2)[..., None, :, :, None] * q[..., :, None, None, :]
    )
    return _finish(a4 * m[..., :, None, :, None], q, m)


def solve(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    """Solve ``a x = b`` for stacked ``(n, 3)`` b; return ``(x, rcond)``.

    ``rcond`` is the reciprocal 1-norm condition number of ``a``. The systems
    are at most a few hundred rows, so one explicit inverse gives both the
    solution and the exact condition number.
    """
    try:
        inv = np.linalg.inv(a)
    except np.linalg.LinAlgError:
        raise SingularInertia("inertia system is exactly singular") from None
    cond = np.abs(a).sum(axis=0).max() * np.abs(inv).sum(axis=0).max()
    if not cond <= COND_LIMIT:  # also catches NaN
        raise SingularInertia(f"inertia system condition number {cond:.3e} exceeds {COND_LIMIT:.0e}")
    x = inv @ np.ravel(b)
    return x.reshape(-1, 3), 1.0 / cond
