"""Forward and inverse conversions between Euler poses and projected 2D cubes.

A head pose is encoded as the orthographic projection of a regular hexahedron:
three projected axis vectors u, v, w (the images of the cube's edge
directions, scaled by the edge length) plus a 2D center.  Stacking u, v, w as
the columns of a 2x3 matrix A gives the defining constraint of a scaled
orthographic rotation projection::

    A @ A.T == edge_len**2 * I_2

The eight cube vertices are indexed by a 3-bit code: bit 0 selects the sign
of u, bit 1 the sign of v, bit 2 the sign of w, and

    vertex(b) = center + s0(b) * u/2 + s1(b) * v/2 + s2(b) * w/2

with ``s_i(b) = +1`` if bit i of b is set, else -1.

Two inverse paths recover the pose from a cube.  The matrix path rebuilds the
first two rotation rows from A / edge_len, re-orthonormalizes them
symmetrically, and reads the angles off the completed rotation matrix; it
covers the full yaw range and has no interior singularities.  The ratio path
eliminates the edge length through the slope ratios

    k1 = u_x / u_y,   k2 = v_x / v_y,   k3 = w_x / w_y

and recovers |yaw| from

    delta = 2 k3^2 (1 + k1 k2) / ((k1 - k3)(k2 - k3)) = 1 - cos(2 yaw)

with the remaining signs resolved from the axis components.  It requires the
three y-denominators (and the k-ratio differences) to stay away from zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import acos, atan2, degrees, sqrt

import numpy as np

from .errors import (
    DegenerateCubeError,
    ProjectionConstraintError,
    RatioPathSingularError,
)
from .rotation import EulerPose, canonicalize, euler_to_matrix, matrix_to_euler

# Accept a cube as projectively consistent when |A A^T - e^2 I| <= TAU_ORTHO * e^2.
TAU_ORTHO = 1e-3
# Ratio-path denominators (pixels) below this are treated as singular.
EPS_DEN = 1e-9
# Edge lengths below this many pixels mean the cube carries no usable geometry.
EPS_EDGE = 1e-9
# Allowed numerical excursion of delta outside its exact range [0, 2].
DELTA_SLACK = 1e-6

# Row b holds (s0, s1, s2) for vertex index b under the bit-sign convention.
VERTEX_SIGNS = np.array(
    [[1.0 if b & bit else -1.0 for bit in (1, 2, 4)] for b in range(8)]
)

# Vertex index pairs (low, high) of the four edges in each direction class.
U_EDGES = ((0, 1), (2, 3), (4, 5), (6, 7))
V_EDGES = ((0, 2), (1, 3), (4, 6), (5, 7))
W_EDGES = ((0, 4), (1, 5), (2, 6), (3, 7))


@dataclass
class AxisProjection:
    """The three projected cube-axis vectors plus the 3D edge length."""

    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    edge_len: float

    def __post_init__(self) -> None:
        self.u = np.asarray(self.u, dtype=np.float64).reshape(2)
        self.v = np.asarray(self.v, dtype=np.float64).reshape(2)
        self.w = np.asarray(self.w, dtype=np.float64).reshape(2)
        self.edge_len = float(self.edge_len)
        if not self.edge_len > 0.0:
            raise ValueError(f"edge_len must be positive, got {self.edge_len}")

    def matrix(self) -> np.ndarray:
        """The 2x3 matrix with columns u, v, w."""
        return np.column_stack((self.u, self.v, self.w))


@dataclass
class Cube2D:
    """Eight projected cube vertices (bit-indexed) plus their center."""

    center: np.ndarray
    vertices: np.ndarray

    def __post_init__(self) -> None:
        self.center = np.asarray(self.center, dtype=np.float64).reshape(2)
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(8, 2)


def projection_residual(axes: AxisProjection) -> float:
    """Max-abs deviation of A A^T from edge_len^2 * I (same units as A^2)."""
    a = axes.matrix()
    gram = a @ a.T - axes.edge_len**2 * np.eye(2)
    return float(np.abs(gram).max())


def euler_to_axes(pose: EulerPose, edge_len: float) -> AxisProjection:
    """Project the cube axes of ``pose`` at 3D edge length ``edge_len``.

    The columns of the result are the first two rotation rows scaled by
    ``edge_len``; they satisfy the projection constraint exactly.
    """
    if not edge_len > 0.0:
        raise ValueError(f"edge_len must be positive, got {edge_len}")
    rows = euler_to_matrix(pose)[:2, :] * float(edge_len)
    return AxisProjection(rows[:, 0], rows[:, 1], rows[:, 2], float(edge_len))


def axes_to_cube(axes: AxisProjection, center) -> Cube2D:
    """Materialize the eight vertices of a cube from its axis projection."""
    c = np.asarray(center, dtype=np.float64).reshape(2)
    half = np.column_stack((axes.u, axes.v, axes.w)).T / 2.0
    return Cube2D(c, c + VERTEX_SIGNS @ half)


def euler2cube(pose: EulerPose, center, edge_len: float) -> Cube2D:
    """Forward conversion: Euler pose -> projected 2D cube."""
    return axes_to_cube(euler_to_axes(pose, edge_len), center)


def cube_to_axes(cube: Cube2D) -> tuple[AxisProjection, np.ndarray]:
    """Recover (axes, center) from a cube's vertices.

    Exact inverse of :func:`axes_to_cube` on valid cubes; on noisy vertices
    each axis is the difference of opposite face centroids (a least-squares
    average) and the edge length comes from the trace identity
    ``2 e^2 = sum(A**2)``.  Raises ``DegenerateCubeError`` when the recovered
    edge length falls below ``EPS_EDGE``.
    """
    verts = cube.vertices
    center = verts.mean(axis=0)
    a = verts.T @ VERTEX_SIGNS / 4.0
    edge = sqrt(float(np.sum(a * a)) / 2.0)
    if edge < EPS_EDGE:
        raise DegenerateCubeError(
            f"degenerate cube: recovered edge length {edge:.3e} px"
        )
    return AxisProjection(a[:, 0], a[:, 1], a[:, 2], edge), center


def _orthonormal_rows(a: np.ndarray, edge: float) -> np.ndarray:
    """Symmetric re-orthonormalization of the two scaled projection rows.

    Both rows are treated identically: build the normalized sum/difference
    directions (which are exactly orthogonal), recombine, and renormalize.
    On exactly orthonormal input this is the identity.
    """
    rho1 = a[0] / edge
    rho2 = a[1] / edge
    splus = rho1 + rho2
    sminus = rho1 - rho2
    nplus = np.linalg.norm(splus)
    nminus = np.linalg.norm(sminus)
    if nplus < 1e-12 or nminus < 1e-12:
        raise DegenerateCubeError("degenerate cube: projection rows are collinear")
    splus /= nplus
    sminus /= nminus
    r1 = splus + sminus
    r2 = splus - sminus
    r1 /= np.linalg.norm(r1)
    r2 /= np.linalg.norm(r2)
    return np.vstack((r1, r2, np.cross(r1, r2)))


def cube2euler_matrix(cube: Cube2D) -> EulerPose:
    """Inverse conversion via rotation-matrix completion (the default path).

    Recovers the axes, rescales them to the first two rotation rows,
    re-orthonormalizes symmetrically, completes the third row by cross
    product, and extracts the canonical Euler triple.  Handles the full yaw
    range with no interior singularities; only degenerate (edge-collapsed or
    rank-1) cubes raise.
    """
    axes, _ = cube_to_axes(cube)
    rows = np.vstack((
        (axes.u[0], axes.v[0], axes.w[0]),
        (axes.u[1], axes.v[1], axes.w[1]),
    ))
    return matrix_to_euler(_orthonormal_rows(rows, axes.edge_len))


def _checked_axes(cube: Cube2D) -> tuple[AxisProjection, float]:
    axes, _ = cube_to_axes(cube)
    residual = projection_residual(axes)
    limit = TAU_ORTHO * axes.edge_len**2
    if residual > limit:
        raise ProjectionConstraintError(
            "cube violates projection constraints: "
            f"|A A^T - e^2 I| = {residual:.3e} exceeds {limit:.3e}"
        )
    return axes, axes.edge_len


def cube2euler_ratios(cube: Cube2D) -> EulerPose:
    """Inverse conversion via the edge-length-free slope ratios.

    Computes k1, k2, k3 from the recovered axis components, |yaw| from the
    delta identity, and resolves the remaining signs from the axis
    components: sign(yaw) from w_x, the yaw quadrant and the sign of
    cos(yaw) from the z-component of the cross product of the projection
    rows, then pitch from w_y and roll from u and v.

    Raises ``RatioPathSingularError`` near the path's singular sets (any
    y-denominator below ``EPS_DEN`` pixels, vanishing k-ratio differences,
    or an unresolvable cos(yaw) sign) and ``ProjectionConstraintError`` when
    the cube is too far from a valid projection or delta leaves [0, 2].
    """
    axes, edge = _checked_axes(cube)
    ux, uy = axes.u
    vx, vy = axes.v
    wx, wy = axes.w
    if min(abs(uy), abs(vy), abs(wy)) < EPS_DEN:
        raise RatioPathSingularError("ratio path singular, use matrix path")
    k1 = ux / uy
    k2 = vx / vy
    k3 = wx / wy
    spread = (k1 - k3) * (k2 - k3)
    if abs(spread) < 1e-12:
        raise RatioPathSingularError("ratio path singular, use matrix path")
    delta = 2.0 * k3 * k3 * (1.0 + k1 * k2) / spread
    if delta < -DELTA_SLACK or delta > 2.0 + DELTA_SLACK:
        raise ProjectionConstraintError(
            f"cube violates projection constraints: delta = {delta:.6e} outside [0, 2]"
        )
    delta = min(max(delta, 0.0), 2.0)
    yaw_mag = 0.5 * degrees(acos(min(max(1.0 - delta, -1.0), 1.0)))

    # cross_z = e^2 cos(yaw) cos(pitch); canonical pitch keeps cos(pitch) >= 0,
    # so its sign is the sign of cos(yaw) and selects between |y| and 180 - |y|.
    cross_z = ux * vy - vx * uy
    if abs(cross_z) < 1e-12 * edge * edge:
        raise RatioPathSingularError("ratio path singular, use matrix path")
    if cross_z < 0.0:
        yaw_mag = 180.0 - yaw_mag
    if wx > 0.0:
        yaw = yaw_mag
    elif wx < 0.0:
        yaw = -yaw_mag
    else:
        yaw = 0.0 if cross_z > 0.0 else 180.0

    sign_cy = 1.0 if cross_z > 0.0 else -1.0
    pitch = degrees(atan2(-sign_cy * wy * edge, sign_cy * cross_z))
    roll = degrees(atan2(-sign_cy * vx, sign_cy * ux))
    return canonicalize(EulerPose(yaw, pitch, roll))


def delta_of_cube(cube: Cube2D) -> float:
    """The yaw discriminant delta = 1 - cos(2 yaw), clamped into [0, 2].

    Evaluated in the fraction-cleared form

        delta = 2 w_x^2 (u . v) / ((u_x w_y - w_x u_y)(v_x w_y - w_x v_y))

    which is algebraically identical to the k-ratio expression but stays
    computable where individual y-denominators vanish (for example at
    |yaw| = 90, where w_y = 0).  Raises ``ProjectionConstraintError`` when the
    cube is far from a valid projection or delta leaves [0, 2] by more than
    ``DELTA_SLACK``, and ``RatioPathSingularError`` when the cleared
    denominator itself vanishes.
    """
    axes, edge = _checked_axes(cube)
    ux, uy = axes.u
    vx, vy = axes.v
    wx, wy = axes.w
    den = (ux * wy - wx * uy) * (vx * wy - wx * vy)
    if abs(den) < 1e-12 * edge**4:
        raise RatioPathSingularError("ratio path singular, use matrix path")
    delta = 2.0 * wx * wx * (ux * vx + uy * vy) / den
    if delta < -DELTA_SLACK or delta > 2.0 + DELTA_SLACK:
        raise ProjectionConstraintError(
            f"cube violates projection constraints: delta = {delta:.6e} outside [0, 2]"
        )
    return min(max(delta, 0.0), 2.0)
