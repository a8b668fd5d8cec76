"""Rigid-transform helpers on 4x4 homogeneous matrices plus quaternion glue.

Conventions: right-handed frames, column vectors, transforms compose left to
right along a chain (``T_world_tool = T_world_base @ T_base_tool``).
Quaternions are (w, x, y, z) with unit norm.
"""

from __future__ import annotations

import numpy as np


def identity() -> np.ndarray:
    return np.eye(4)


def translation(x: float, y: float, z: float) -> np.ndarray:
    t = np.eye(4)
    t[:3, 3] = (x, y, z)
    return t


def rot_x(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    t = np.eye(4)
    t[1, 1], t[1, 2] = c, -s
    t[2, 1], t[2, 2] = s, c
    return t


def rot_y(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    t = np.eye(4)
    t[0, 0], t[0, 2] = c, s
    t[2, 0], t[2, 2] = -s, c
    return t


def rot_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    t = np.eye(4)
    t[0, 0], t[0, 1] = c, -s
    t[1, 0], t[1, 1] = s, c
    return t


def rotation(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation about an arbitrary unit axis."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    x, y, z = axis
    c, s = np.cos(angle), np.sin(angle)
    cc = 1.0 - c
    r = np.array(
        [
            [c + x * x * cc, x * y * cc - z * s, x * z * cc + y * s],
            [y * x * cc + z * s, c + y * y * cc, y * z * cc - x * s],
            [z * x * cc - y * s, z * y * cc + x * s, c + z * z * cc],
        ]
    )
    t = np.eye(4)
    t[:3, :3] = r
    return t


def inverse(t: np.ndarray) -> np.ndarray:
    """Inverse exploiting the rigid structure (no general solve)."""
    r = t[:3, :3]
    out = np.eye(4)
    out[:3, :3] = r.T
    out[:3, 3] = -r.T @ t[:3, 3]
    return out


def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if n == 0.0:
        raise ValueError("zero quaternion")
    q = q / n
    if q[0] < 0.0:  # canonical hemisphere
        q = -q
    return q


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = quat_normalize(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_matrix(r: np.ndarray) -> np.ndarray:
    """Shepperd's method; returns the canonical (w >= 0) quaternion."""
    m = np.asarray(r, dtype=float)[:3, :3]
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0.0:
        s = np.sqrt(tr + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
        )
    elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
        s = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q = np.array(
            [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
        )
    elif m[1, 1] >= m[2, 2]:
        s = np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q = np.array(
            [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
        )
    else:
        s = np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q = np.array(
            [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
        )
    return quat_normalize(q)


def rotvec_from_matrix(r: np.ndarray) -> np.ndarray:
    """Rotation vector (axis * angle) of a rotation matrix, stable near 0 and pi."""
    m = np.asarray(r, dtype=float)[:3, :3]
    cos_a = np.clip((np.trace(m) - 1.0) / 2.0, -1.0, 1.0)
    angle = np.arccos(cos_a)
    if angle < 1e-12:
        return np.zeros(3)
    if angle > np.pi - 1e-6:
        # near pi the antisymmetric part vanishes; recover axis from diagonal
        axis = np.sqrt(np.maximum(np.diag(m) - cos_a, 0.0) / (1.0 - cos_a))
        # fix signs from off-diagonal sums
        if m[0, 1] + m[1, 0] < 0:
            axis[1] = -axis[1]
        if m[0, 2] + m[2, 0] < 0:
            axis[2] = -axis[2]
        if m[1, 2] + m[2, 1] < 0 and axis[1] * axis[2] > 0:
            axis[2] = -axis[2]
        return axis / np.linalg.norm(axis) * angle
    vec = np.array([m[2, 1] - m[1, 2], m[0, 2] - m[2, 0], m[1, 0] - m[0, 1]])
    return vec * (angle / (2.0 * np.sin(angle)))


def make_transform(rotation_3x3, translation_3) -> np.ndarray:
    t = np.eye(4)
    t[:3, :3] = rotation_3x3
    t[:3, 3] = translation_3
    return t
