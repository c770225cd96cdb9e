"""Turn dense output maps into detections, cube keypoints, and poses.

The maps follow the usual center-point detection layout at an integer stride:
a center heatmap with sub-cell offsets and box sizes, eight per-vertex
keypoint heatmaps with shared sub-cell offsets, per-vertex displacement
vectors stored at the center cell, and a three-channel relative-dims map.

Decoding is a pure function of (maps, config):

1. 3x3 max-pool peaks on the center heatmap -> centers, boxes, scores.
2. Per vertex, fuse a displacement-based proposal with the nearest confident
   heatmap peak inside the (margin-expanded) box, then apply sub-cell offsets.
3. Assemble the raw cube, edge-adjust it with the dims sampled at the center
   cell, and convert to Euler angles.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .config import parse_kv_file
from .errors import CubePoseError
from .fitting import RelDims, edge_adjust, rectify_orthoscale
from .projection import Cube2D, cube2euler_matrix
from .rotation import EulerPose

# Per-channel cap on retained heatmap peaks; generous relative to max_det.
KP_PEAK_CAP = 256


@dataclass
class TensorMaps:
    """Dense per-cell regression outputs at an integer stride."""

    stride: int
    center_heat: np.ndarray  # (H, W) scores in [0, 1]
    center_off: np.ndarray   # (H, W, 2) sub-cell fractions
    box_size: np.ndarray     # (H, W, 2) box w, h in map units
    kp_heat: np.ndarray      # (H, W, 8) scores in [0, 1]
    kp_off: np.ndarray       # (H, W, 2) shared sub-cell keypoint fractions
    kp_disp: np.ndarray      # (H, W, 16) per-vertex (dx, dy) from center cell
    dims: np.ndarray         # (H, W, 3) relative diagonal dims

    def validate(self) -> None:
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        h, w = self.center_heat.shape
        expected = {
            "center_off": (h, w, 2),
            "box_size": (h, w, 2),
            "kp_heat": (h, w, 8),
            "kp_off": (h, w, 2),
            "kp_disp": (h, w, 16),
            "dims": (h, w, 3),
        }
        for name, shape in expected.items():
            got = getattr(self, name).shape
            if got != shape:
                raise ValueError(f"{name} has shape {got}, expected {shape}")
        for name in ("center_heat", "kp_heat"):
            scores = getattr(self, name)
            if scores.size and (scores.min() < 0.0 or scores.max() > 1.0):
                raise ValueError(f"{name} scores must lie in [0, 1]")

    @classmethod
    def zeros(cls, height: int, width: int, stride: int = 4) -> "TensorMaps":
        f32 = np.float32
        return cls(
            stride=stride,
            center_heat=np.zeros((height, width), f32),
            center_off=np.zeros((height, width, 2), f32),
            box_size=np.zeros((height, width, 2), f32),
            kp_heat=np.zeros((height, width, 8), f32),
            kp_off=np.zeros((height, width, 2), f32),
            kp_disp=np.zeros((height, width, 16), f32),
            dims=np.zeros((height, width, 3), f32),
        )


@dataclass
class DecodeConfig:
    center_threshold: float = 0.3
    kp_threshold: float = 0.1
    margin_frac: float = 0.25
    max_det: int = 32
    use_heatmap_kp: bool = True
    use_displacement_kp: bool = True
    use_edge_adjust: bool = True
    use_rectify: bool = False

    @classmethod
    def from_mapping(cls, mapping: dict) -> "DecodeConfig":
        kwargs = {}
        types = {f.name: f.type for f in fields(cls)}
        for key, raw in mapping.items():
            if key not in types:
                raise ValueError(f"unknown decode config key: {key!r}")
            kwargs[key] = _parse_value(raw, types[key])
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path) -> "DecodeConfig":
        return cls.from_mapping(parse_kv_file(path))


def _parse_value(raw, typename: str):
    if isinstance(raw, (bool, int, float)):
        return raw
    text = str(raw).strip()
    if typename == "bool":
        lowered = text.lower()
        if lowered in ("true", "1", "yes", "on"):
            return True
        if lowered in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if typename == "int":
        return int(text)
    return float(text)


@dataclass
class Detection:
    """One decoded head: center, box, and score always; the rest as filled."""

    center: np.ndarray
    score: float
    box: np.ndarray
    cell: tuple[int, int]
    keypoints: np.ndarray | None = None
    raw_cube: Cube2D | None = None
    adjusted_cube: Cube2D | None = None
    pose: EulerPose | None = None
    error: str | None = None


def nms_peaks(heat: np.ndarray, threshold: float, max_peaks: int):
    """Cells that dominate their 3x3 neighborhood and exceed ``threshold``.

    Ties inside a neighborhood are broken toward the smaller row-major index.
    Returns up to ``max_peaks`` tuples (cell_x, cell_y, score) sorted by score
    descending, then row-major index.
    """
    heat = np.asarray(heat, dtype=np.float64)
    if heat.size == 0 or max_peaks <= 0:
        return []
    padded = np.pad(heat, 1, constant_values=-np.inf)
    shifts = {
        (dy, dx): padded[1 + dy : 1 + dy + heat.shape[0], 1 + dx : 1 + dx + heat.shape[1]]
        for dy in (-1, 0, 1)
        for dx in (-1, 0, 1)
        if (dy, dx) != (0, 0)
    }
    neighborhood_max = heat.copy()
    for view in shifts.values():
        np.maximum(neighborhood_max, view, out=neighborhood_max)
    mask = (heat > threshold) & (heat >= neighborhood_max)
    # a tied neighbor earlier in row-major order wins the whole plateau edge
    for dy, dx in ((-1, -1), (-1, 0), (-1, 1), (0, -1)):
        mask &= shifts[(dy, dx)] != heat
    rows, cols = np.nonzero(mask)
    if rows.size == 0:
        return []
    scores = heat[rows, cols]
    order = np.lexsort((rows * heat.shape[1] + cols, -scores))[:max_peaks]
    return [(int(cols[i]), int(rows[i]), float(scores[i])) for i in order]


def decode_centers(maps: TensorMaps, threshold: float, max_det: int) -> list[Detection]:
    """Detections (center, box, score only) from the center heatmap."""
    stride = float(maps.stride)
    out = []
    for cx, cy, score in nms_peaks(maps.center_heat, threshold, max_det):
        off = maps.center_off[cy, cx].astype(np.float64)
        center = (np.array([cx, cy], dtype=np.float64) + off) * stride
        box = maps.box_size[cy, cx].astype(np.float64) * stride
        out.append(Detection(center=center, score=score, box=box, cell=(cx, cy)))
    return out


def _clip_cell(x: float, y: float, shape) -> tuple[int, int]:
    h, w = shape
    cx = int(min(max(round(x), 0), w - 1))
    cy = int(min(max(round(y), 0), h - 1))
    return cx, cy


def decode_keypoints(
    det: Detection,
    maps: TensorMaps,
    margin_frac: float,
    kp_threshold: float,
    use_heatmap: bool = True,
    use_displacement: bool = True,
    heat_peaks=None,
) -> np.ndarray:
    """Eight fused keypoint locations (input-image pixels) for one detection.

    The displacement proposal for vertex i is ``center_cell + disp_i``.  When
    heatmap peaks are enabled, the proposal snaps to the nearest peak of
    channel i that lies inside the detection box expanded by
    ``margin_frac * max(box)`` and within that same radius of the proposal;
    otherwise the proposal stands.  With displacements disabled, each channel
    contributes its highest-scoring peak inside the expanded box (falling
    back to the detection center when none exists).  The shared sub-cell
    offset at the chosen cell is added last.
    """
    stride = float(maps.stride)
    shape = maps.center_heat.shape
    ccx, ccy = det.cell
    margin = margin_frac * float(max(det.box[0], det.box[1]))
    lo = (det.center - det.box / 2.0 - margin) / stride
    hi = (det.center + det.box / 2.0 + margin) / stride
    if heat_peaks is None and use_heatmap:
        heat_peaks = [
            nms_peaks(maps.kp_heat[:, :, i], kp_threshold, KP_PEAK_CAP) for i in range(8)
        ]
    keypoints = np.empty((8, 2), dtype=np.float64)
    for i in range(8):
        disp = maps.kp_disp[ccy, ccx, 2 * i : 2 * i + 2].astype(np.float64)
        proposal = np.array([ccx, ccy], dtype=np.float64) + disp
        chosen = None
        if use_heatmap:
            in_region = [
                (px, py)
                for px, py, _score in heat_peaks[i]
                if lo[0] <= px <= hi[0] and lo[1] <= py <= hi[1]
            ]
            if use_displacement:
                best = None
                for px, py in in_region:
                    dist = float(np.hypot(px - proposal[0], py - proposal[1])) * stride
                    if dist <= margin and (best is None or dist < best[0]):
                        best = (dist, px, py)
                if best is not None:
                    chosen = (best[1], best[2])
            elif in_region:
                # peaks are score-sorted: the first in-region one is the best
                chosen = in_region[0]
        if chosen is None and use_displacement:
            chosen = _clip_cell(proposal[0], proposal[1], shape)
        if chosen is None:
            # heatmap-only mode with no confident peak: degrade to the center
            keypoints[i] = det.center
            continue
        off = maps.kp_off[chosen[1], chosen[0]].astype(np.float64)
        keypoints[i] = (np.array(chosen, dtype=np.float64) + off) * stride
    return keypoints


def _dims_at(maps: TensorMaps, cell: tuple[int, int]) -> RelDims:
    raw = maps.dims[cell[1], cell[0]].astype(np.float64)
    if np.all(raw > 0.0):
        return RelDims(raw)
    return RelDims(np.ones(3))


def decode_pose(maps: TensorMaps, cfg: DecodeConfig | None = None) -> list[Detection]:
    """Full decode: centers -> keypoints -> cube -> adjusted cube -> pose.

    Detections are returned sorted by score (the peak ordering).  A detection
    whose cube cannot be converted carries the failure in ``error`` and leaves
    the other detections untouched.
    """
    cfg = cfg or DecodeConfig()
    maps.validate()
    detections = decode_centers(maps, cfg.center_threshold, cfg.max_det)
    if not detections:
        return []
    heat_peaks = None
    if cfg.use_heatmap_kp:
        heat_peaks = [
            nms_peaks(maps.kp_heat[:, :, i], cfg.kp_threshold, KP_PEAK_CAP) for i in range(8)
        ]
    for det in detections:
        det.keypoints = decode_keypoints(
            det,
            maps,
            cfg.margin_frac,
            cfg.kp_threshold,
            use_heatmap=cfg.use_heatmap_kp,
            use_displacement=cfg.use_displacement_kp,
            heat_peaks=heat_peaks,
        )
        det.raw_cube = Cube2D(det.keypoints.mean(axis=0), det.keypoints)
        try:
            cube = det.raw_cube
            if cfg.use_edge_adjust:
                cube = edge_adjust(cube, _dims_at(maps, det.cell))
            if cfg.use_rectify:
                cube, _ = rectify_orthoscale(cube)
            det.adjusted_cube = cube
            det.pose = cube2euler_matrix(cube)
        except CubePoseError as exc:
            det.error = str(exc)
    return detections
