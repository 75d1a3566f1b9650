"""Internal unit-quaternion helpers for orientation interpolation.

Quaternions are float arrays in [w, x, y, z] order.  This module is an
implementation detail of the fusion and resampling code; orientations in the
public API are always Euler angles or rotation matrices.
"""

from __future__ import annotations

import numpy as np


def mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product; broadcasts over leading axes."""
    aw, ax, ay, az = np.moveaxis(np.asarray(a, dtype=float), -1, 0)
    bw, bx, by, bz = np.moveaxis(np.asarray(b, dtype=float), -1, 0)
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def from_euler_zyx(angles: np.ndarray) -> np.ndarray:
    """Quaternions for intrinsic z-y'-x'' angles.

    ``angles`` is (..., 3) in (psi, theta, phi) order, radians.
    """
    angles = np.asarray(angles, dtype=float)
    half = angles / 2.0
    cz, sz = np.cos(half[..., 0]), np.sin(half[..., 0])
    cy, sy = np.cos(half[..., 1]), np.sin(half[..., 1])
    cx, sx = np.cos(half[..., 2]), np.sin(half[..., 2])
    zero = np.zeros_like(cz)
    qz = np.stack([cz, zero, zero, sz], axis=-1)
    qy = np.stack([cy, zero, sy, zero], axis=-1)
    qx = np.stack([cx, sx, zero, zero], axis=-1)
    return mul(mul(qz, qy), qx)


def to_matrix(q: np.ndarray) -> np.ndarray:
    """3x3 rotation matrix for one quaternion."""
    q = np.asarray(q, dtype=float)
    w, x, y, z = q / np.linalg.norm(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def make_continuous(qs: np.ndarray) -> np.ndarray:
    """Flip signs along a quaternion sequence so neighbors sit in one hemisphere.

    q and -q encode the same rotation; interpolation needs the representative
    chain to be sign-consistent.
    """
    qs = np.array(qs, dtype=float)
    for i in range(1, len(qs)):
        if np.dot(qs[i - 1], qs[i]) < 0.0:
            qs[i] = -qs[i]
    return qs


def slerp(qa: np.ndarray, qb: np.ndarray, u: float) -> np.ndarray:
    """Shortest-arc spherical interpolation between two unit quaternions."""
    qa = np.asarray(qa, dtype=float)
    qb = np.asarray(qb, dtype=float)
    if u <= 0.0:
        return qa.copy()
    if u >= 1.0:
        return qb.copy()
    dot = float(np.dot(qa, qb))
    if dot < 0.0:
        qb = -qb
        dot = -dot
    if dot > 1.0 - 1e-12:
        # nearly parallel: linear blend avoids division by sin(~0)
        q = qa + u * (qb - qa)
        return q / np.linalg.norm(q)
    omega = np.arccos(min(1.0, dot))
    s = np.sin(omega)
    q = (np.sin((1.0 - u) * omega) / s) * qa + (np.sin(u * omega) / s) * qb
    return q / np.linalg.norm(q)
