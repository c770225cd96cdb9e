"""Euler angle conventions, rotation matrices, and wrap-aware angle arithmetic.

Angles are exchanged in degrees everywhere in this package; trigonometry is
done in radians internally.  The yaw-pitch-roll convention is defined by the
rows of the rotation matrix returned by :func:`euler_to_matrix`:

    row 1 = ( cos y cos r,                       -cos y sin r,                       sin y )
    row 2 = ( cos p sin r + sin p sin y cos r,    cos p cos r - sin p sin y sin r,  -cos y sin p )
    row 3 = row 1 x row 2

The first two rows, scaled by an edge length, are exactly the three projected
cube-axis vectors used by :mod:`cubepose.projection`.

Canonical angle ranges are yaw, roll in (-180, 180] and pitch in [-90, 90].
Two Euler triples produce the same matrix under the involution
(y, p, r) -> (180 - y, p + 180, r + 180); canonicalization applies it whenever
|pitch| > 90 and wraps all three angles.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import atan2, cos, degrees, hypot, isfinite, radians, sin

import numpy as np

from .errors import NotARotationError

# |cos(yaw)| below this is treated as gimbal lock (|yaw| = 90).
GIMBAL_LOCK_TOL = 1e-9
# Max allowed deviation of R^T R from I (and of det from +1) on input matrices.
ORTHONORMAL_TOL = 1e-6


@dataclass(frozen=True)
class EulerPose:
    """A yaw-pitch-roll triple in degrees."""

    yaw: float
    pitch: float
    roll: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.yaw, self.pitch, self.roll)


def wrap_angle(angle: float) -> float:
    """Wrap an angle in degrees into (-180, 180].

    The result is congruent to ``angle`` modulo 360.  Non-finite input raises
    ``ValueError``.
    """
    a = float(angle)
    if not isfinite(a):
        raise ValueError(f"angle must be finite, got {angle!r}")
    return 180.0 - (180.0 - a) % 360.0


def angle_diff(a: float, b: float) -> float:
    """Absolute difference between two angles on the circle, in [0, 180]."""
    return abs(wrap_angle(float(a) - float(b)))


def canonicalize(pose: EulerPose) -> EulerPose:
    """Return the canonical representative of ``pose``.

    Yaw and roll are wrapped into (-180, 180]; if the wrapped pitch falls
    outside [-90, 90] the matrix-preserving involution
    (y, p, r) -> (180 - y, p + 180, r + 180) is applied first.  Idempotent.
    """
    p = wrap_angle(pose.pitch)
    if abs(p) > 90.0:
        return EulerPose(
            wrap_angle(180.0 - pose.yaw),
            wrap_angle(p + 180.0),
            wrap_angle(pose.roll + 180.0),
        )
    return EulerPose(wrap_angle(pose.yaw), p, wrap_angle(pose.roll))


def euler_to_matrix(pose: EulerPose) -> np.ndarray:
    """Build the 3x3 rotation matrix for ``pose``.

    The returned matrix has orthonormal rows and determinant +1 to machine
    precision; its first two rows are the projection rows documented in the
    module docstring.
    """
    y = radians(wrap_angle(pose.yaw))
    p = radians(wrap_angle(pose.pitch))
    r = radians(wrap_angle(pose.roll))
    cy, sy = cos(y), sin(y)
    cp, sp = cos(p), sin(p)
    cr, sr = cos(r), sin(r)
    r1 = (cy * cr, -cy * sr, sy)
    r2 = (cp * sr + sp * sy * cr, cp * cr - sp * sy * sr, -cy * sp)
    r3 = (
        r1[1] * r2[2] - r1[2] * r2[1],
        r1[2] * r2[0] - r1[0] * r2[2],
        r1[0] * r2[1] - r1[1] * r2[0],
    )
    return np.array((r1, r2, r3), dtype=np.float64)


def check_rotation(m: np.ndarray, tol: float = ORTHONORMAL_TOL) -> np.ndarray:
    """Validate that ``m`` is a 3x3 rotation matrix; return it as float64.

    Raises ``NotARotationError`` when ``m`` has the wrong shape, is not
    orthonormal within ``tol``, or has determinant differing from +1 by more
    than ``tol``.
    """
    mat = np.asarray(m, dtype=np.float64)
    if mat.shape != (3, 3):
        raise NotARotationError(f"expected a 3x3 matrix, got shape {mat.shape}")
    err = np.abs(mat @ mat.T - np.eye(3)).max()
    if err > tol:
        raise NotARotationError(f"matrix is not orthonormal: max |R R^T - I| = {err:.3e}")
    det = float(np.linalg.det(mat))
    if abs(det - 1.0) > tol:
        raise NotARotationError(f"matrix determinant is {det:.6f}, expected +1")
    return mat


def matrix_to_euler(m: np.ndarray) -> EulerPose:
    """Extract the canonical Euler triple from a rotation matrix.

    Away from gimbal lock the result satisfies
    ``euler_to_matrix(matrix_to_euler(R)) == R`` to machine precision.  At
    gimbal lock (|yaw| = 90, where pitch and roll are not separately
    observable) roll is fixed to 0 and the free angle is folded into pitch;
    canonicalization may then move a 180-degree flip back into roll so that
    pitch stays inside [-90, 90].
    """
    mat = check_rotation(m)
    cy = hypot(mat[0, 0], mat[0, 1])
    if cy < GIMBAL_LOCK_TOL:
        sign = 1.0 if mat[0, 2] > 0.0 else -1.0
        folded = sign * degrees(atan2(mat[1, 0], mat[1, 1]))
        return canonicalize(EulerPose(sign * 90.0, folded, 0.0))
    yaw = degrees(atan2(mat[0, 2], cy))
    pitch = degrees(atan2(-mat[1, 2], mat[2, 2]))
    roll = degrees(atan2(-mat[0, 1], mat[0, 0]))
    return canonicalize(EulerPose(yaw, pitch, roll))
