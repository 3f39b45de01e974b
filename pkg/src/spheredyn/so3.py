"""Hat map on R^3 and the small vector helpers built on it.

All functions accept a single 3-vector or a stack of them with shape
``(..., 3)``; ``hat`` then returns ``(..., 3, 3)``.
"""

from __future__ import annotations

import numpy as np

# Absolute tolerance on |M + M^T| entries accepted by ``vee``.
SKEW_TOL = 1e-12


class NotSkewSymmetric(ValueError):
    """Raised by :func:`vee` when its argument is not skew-symmetric."""


def hat(x) -> np.ndarray:
    """Return the skew-symmetric matrix S(x) with S(x) @ y == cross(x, y)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape + (3,))
    out[..., 0, 1] = -x[..., 2]
    out[..., 0, 2] = x[..., 1]
    out[..., 1, 0] = x[..., 2]
    out[..., 1, 2] = -x[..., 0]
    out[..., 2, 0] = -x[..., 1]
    out[..., 2, 1] = x[..., 0]
    return out


def vee(m, tol: float = SKEW_TOL) -> np.ndarray:
    """Inverse of :func:`hat`.

    The entries are copied, not averaged, so ``vee(hat(x))`` is exactly ``x``.
    """
    m = np.asarray(m, dtype=float)
    if m.shape[-2:] != (3, 3):
        raise ValueError(f"expected (..., 3, 3) array, got shape {m.shape}")
    asym = np.abs(m + np.swapaxes(m, -1, -2))
    if asym.size and np.max(asym) > tol:
        raise NotSkewSymmetric(f"|M + M^T| reaches {np.max(asym):.3e} > {tol:.1e}")
    return np.stack([m[..., 2, 1], m[..., 0, 2], m[..., 1, 0]], axis=-1)


_ROT1 = np.array([1, 2, 0])
_ROT2 = np.array([2, 0, 1])


def cross(x, y) -> np.ndarray:
    """Row-wise cross product (``np.cross`` is slow on tiny arrays)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return x.take(_ROT1, -1) * y.take(_ROT2, -1) - x.take(_ROT2, -1) * y.take(_ROT1, -1)


def dot(x, y):
    """Row-wise dot product; a float for single vectors."""
    return np.einsum("...i,...i->...", np.asarray(x, dtype=float), np.asarray(y, dtype=float))


def outer(x, y) -> np.ndarray:
    return np.einsum("...i,...j->...ij", np.asarray(x, dtype=float), np.asarray(y, dtype=float))


def identity_residuals(x, y, z) -> dict:
    """Largest absolute error of each hat-map identity over stacks of triples.

    Keys name the identity; all values should sit at roundoff level.
    """
    x, y, z = (np.atleast_2d(np.asarray(a, dtype=float)) for a in (x, y, z))
    sx, sy, sz = hat(x), hat(y), hat(z)
    eye = np.eye(3)
    xx = dot(x, x)[:, None, None]
    sx2 = sx @ sx

    def worst(a):
        return float(np.max(np.abs(a)))

    triple = np.stack([dot(x, cross(y, z)), dot(y, cross(z, x)), dot(z, cross(x, y))])
    return {
        "skew": worst(np.swapaxes(sx, -1, -2) + sx),
        "square": worst(sx2 - (-xx * eye + outer(x, x))),
        "cube": worst(sx2 @ sx + xx * sx),
        "triple_product": max(worst(triple[0] - triple[1]), worst(triple[1] - triple[2])),
        "double_cross": worst(np.einsum("nij,nj->ni", sx @ sy, z) - (dot(x, z)[:, None] * y - dot(x, y)[:, None] * z)),
        "commutator": max(
            worst(hat(cross(x, y)) - (sx @ sy - sy @ sx)),
            worst(hat(cross(x, y)) - (outer(y, x) - outer(x, y))),
        ),
        "hat_cross": worst(np.einsum("nij,nj->ni", sx, y) - cross(x, y)),
    }
