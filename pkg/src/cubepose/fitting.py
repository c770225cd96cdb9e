"""Project noisy eight-vertex predictions onto the family of valid cubes.

The central tool is the dual octahedron: the six face centroids of a
hexahedron.  Because orthographic projection is linear, taking 2D face
centroids commutes with projecting the 3D dual, so a noisy 2D hexahedron can
be cleaned by (1) taking its dual octahedron, (2) symmetrizing and rescaling
the three diagonals, and (3) restoring the dual hexahedron, whose opposite
edges are exactly parallel by construction.

A stricter alternative, :func:`rectify_orthoscale`, snaps the recovered axis
matrix onto the full projection constraint ``A A^T = e^2 I`` via its SVD.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCubeError
from .projection import (
    EPS_DEN,
    U_EDGES,
    V_EDGES,
    VERTEX_SIGNS,
    W_EDGES,
    AxisProjection,
    Cube2D,
    axes_to_cube,
    cube_to_axes,
)

# Fraction of the mean diagonal length used to floor near-zero relative dims.
REL_DIM_FLOOR = 1e-3

# Boolean vertex masks selecting the positive face of each axis (u, v, w).
_POS_FACE = [np.array([bool(b & bit) for b in range(8)]) for bit in (1, 2, 4)]


@dataclass
class Octa2D:
    """Six apex points indexed (+u, -u, +v, -v, +w, -w) plus a center."""

    center: np.ndarray
    apexes: np.ndarray

    def __post_init__(self) -> None:
        self.center = np.asarray(self.center, dtype=np.float64).reshape(2)
        self.apexes = np.asarray(self.apexes, dtype=np.float64).reshape(6, 2)


@dataclass
class RelDims:
    """Three positive relative diagonal dimensions, normalized to mean 1."""

    d: np.ndarray

    def __post_init__(self) -> None:
        self.d = np.asarray(self.d, dtype=np.float64).reshape(3)
        if not np.all(self.d > 0.0):
            raise ValueError(f"relative dims must be positive, got {self.d}")
        self.d = self.d / self.d.mean()


def cube_rel_dims(cube: Cube2D) -> RelDims:
    """Ground-truth relative dims of a cube: its projected diagonal lengths.

    Near-zero diagonals (an axis pointing almost along the view direction
    projects to almost nothing) are floored at ``REL_DIM_FLOOR`` of the mean
    length so the result is always a valid ``RelDims``.
    """
    axes, _ = cube_to_axes(cube)
    lengths = np.array([
        np.linalg.norm(axes.u),
        np.linalg.norm(axes.v),
        np.linalg.norm(axes.w),
    ])
    return RelDims(np.maximum(lengths, REL_DIM_FLOOR * lengths.mean()))


def dual_octahedron(cube: Cube2D) -> Octa2D:
    """Face centroids of the (possibly noisy) hexahedron.

    Averaging four vertices per apex cuts independent per-vertex noise
    variance by 4.
    """
    verts = cube.vertices
    apexes = np.empty((6, 2))
    for k, mask in enumerate(_POS_FACE):
        apexes[2 * k] = verts[mask].mean(axis=0)
        apexes[2 * k + 1] = verts[~mask].mean(axis=0)
    return Octa2D(verts.mean(axis=0), apexes)


def regulate_diagonals(octa: Octa2D, dims: RelDims) -> Octa2D:
    """Symmetrize the octahedron and regulate its diagonal lengths.

    Each half-diagonal a_k = (apex(+k) - apex(-k)) / 2 keeps its direction and
    is rescaled to the target length ``dims.d[k] * mean_j(|a_j| / dims.d[j])``;
    diagonals shorter than ``EPS_DEN`` pass through unscaled.  The output
    apexes are ``center +- a_k`` about the recomputed center, so antipodal
    symmetry holds exactly.  When ``dims`` is proportional to the true
    diagonal lengths the rescaling is a uniform scale, which leaves the
    decoded pose untouched.
    """
    center = octa.apexes.mean(axis=0)
    half = (octa.apexes[0::2] - octa.apexes[1::2]) / 2.0
    lengths = np.linalg.norm(half, axis=1)
    target = dims.d * float(np.mean(lengths / dims.d))
    scale = np.where(lengths > EPS_DEN, target / np.maximum(lengths, EPS_DEN), 1.0)
    half = half * scale[:, None]
    apexes = np.empty((6, 2))
    apexes[0::2] = center + half
    apexes[1::2] = center - half
    return Octa2D(center, apexes)


def dual_hexahedron(octa: Octa2D) -> Cube2D:
    """Restore the hexahedron whose face centroids are the given apexes.

    With a_k = apex(+k) - center, vertex b is
    ``center + s0(b) a_u + s1(b) a_v + s2(b) a_w``; equivalently three times
    the centroid of the three sign-selected apexes, measured from the center.
    Exact inverse of :func:`dual_octahedron` on valid cubes.
    """
    half = octa.apexes[0::2] - octa.center
    return Cube2D(octa.center, octa.center + VERTEX_SIGNS @ half)


def edge_adjust(cube: Cube2D, dims: RelDims) -> Cube2D:
    """Project a noisy cube onto the parallel-opposite-edge family.

    Composition of :func:`dual_octahedron`, :func:`regulate_diagonals`, and
    :func:`dual_hexahedron`.  The output's three sets of four edges are each a
    single vector, so its parallelism residual is zero up to rounding.
    Raises ``DegenerateCubeError`` when all apexes collapse to one point.
    """
    octa = dual_octahedron(cube)
    half = (octa.apexes[0::2] - octa.apexes[1::2]) / 2.0
    if float(np.linalg.norm(half, axis=1).max()) < EPS_DEN:
        raise DegenerateCubeError("degenerate cube: all octahedron apexes collapsed")
    return dual_hexahedron(regulate_diagonals(octa, dims))


def rectify_orthoscale(cube: Cube2D) -> tuple[Cube2D, float]:
    """Snap a cube onto the exact projection constraint A A^T = e^2 I.

    Replaces both singular values of the recovered 2x3 axis matrix by their
    mean (the Frobenius-nearest scaled row-orthonormal matrix) and rebuilds
    the cube about its center.  Returns the rectified cube and the fitted
    edge length.  Raises ``DegenerateCubeError`` for rank-deficient
    (view-degenerate) input.
    """
    axes, center = cube_to_axes(cube)
    u_svd, s, vt = np.linalg.svd(axes.matrix(), full_matrices=False)
    if s[1] < 1e-9 * s[0]:
        raise DegenerateCubeError("view-degenerate cube: axis matrix is rank 1")
    edge = float(s.mean())
    snapped = edge * (u_svd @ vt)
    fitted = AxisProjection(snapped[:, 0], snapped[:, 1], snapped[:, 2], edge)
    return axes_to_cube(fitted, center), edge


def parallelism_residual(cube: Cube2D) -> float:
    """Worst angle (radians) between same-direction edges of the cube.

    For each direction class the four edge vectors are compared pairwise;
    pairs containing a near-zero edge are skipped.  Zero for any cube whose
    opposite edges are exactly parallel.  Raises ``DegenerateCubeError`` if
    every pair in every class is degenerate.
    """
    verts = cube.vertices
    worst = -1.0
    for pairs in (U_EDGES, V_EDGES, W_EDGES):
        edges = [verts[hi] - verts[lo] for lo, hi in pairs]
        norms = [float(np.hypot(e[0], e[1])) for e in edges]
        for i in range(4):
            if norms[i] < 1e-12:
                continue
            for j in range(i + 1, 4):
                if norms[j] < 1e-12:
                    continue
                cross = edges[i][0] * edges[j][1] - edges[i][1] * edges[j][0]
                dot = edges[i][0] * edges[j][0] + edges[i][1] * edges[j][1]
                worst = max(worst, float(np.arctan2(abs(cross), dot)))
    if worst < 0.0:
        raise DegenerateCubeError("degenerate cube: all edges have zero length")
    return worst
