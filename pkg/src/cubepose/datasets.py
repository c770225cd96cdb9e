"""Label conversion, ground-truth map rendering, metrics, and file formats.

File formats
------------
``labels.jsonl``  one head label per line:
    {"image_id": str, "bbox": [x, y, w, h], "yaw": deg, "pitch": deg,
     "roll": deg, "nose": [x, y]?, "l": px?}

``cubes.jsonl``  one cube label per line:
    {"image_id": str, "bbox": [x, y, w, h], "center": [x, y],
     "vertices": [[x, y] * 8], "dims": [du, dv, dw]}
    vertices are in bit-index order (bit 0 = u sign, bit 1 = v, bit 2 = w).

``preds.jsonl``  one pose prediction per line:
    {"image_id": str, "yaw": deg, "pitch": deg, "roll": deg}

``.tmap``  tensor container: a one-line JSON manifest
    {"format": "tmap-v1", "tensors": {name: [offset, length]}, "meta": {...}}
followed by the concatenated sections.  Offsets are relative to the byte
after the manifest newline.  Each section is a one-line JSON header
    {"shape": [H, W, C], "dtype": "f32", "order": "row-major",
     "byte_order": "little"}
followed by the raw little-endian float32 payload.  Round trips are
bit-exact and platform independent.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .decoding import TensorMaps
from .errors import FileFormatError
from .fitting import RelDims, cube_rel_dims
from .projection import Cube2D, cube_to_axes, euler2cube
from .rotation import EulerPose, angle_diff, canonicalize, wrap_angle


@dataclass
class HeadLabel:
    """Ground-truth record: bounding box, pose, optional nose and size."""

    image_id: str
    bbox: tuple[float, float, float, float]
    pose: EulerPose
    nose: np.ndarray | None = None
    head_size: float | None = None  # overrides min(bbox w, h) as the edge length

    def __post_init__(self) -> None:
        self.bbox = tuple(float(x) for x in self.bbox)
        if len(self.bbox) != 4 or self.bbox[2] <= 0.0 or self.bbox[3] <= 0.0:
            raise ValueError(f"bbox must be (x, y, w>0, h>0), got {self.bbox}")
        self.pose = canonicalize(self.pose)
        if self.nose is not None:
            self.nose = np.asarray(self.nose, dtype=np.float64).reshape(2)
        if self.head_size is not None and not self.head_size > 0.0:
            raise ValueError(f"head size must be positive, got {self.head_size}")


@dataclass
class CubeLabel:
    """A head label converted to cube form."""

    image_id: str
    cube: Cube2D
    bbox: tuple[float, float, float, float]
    dims: RelDims

    def __post_init__(self) -> None:
        self.bbox = tuple(float(x) for x in self.bbox)
        x, y, w, h = self.bbox
        cx, cy = self.cube.vertices.mean(axis=0)
        if not (x - 0.5 * w <= cx <= x + 1.5 * w and y - 0.5 * h <= cy <= y + 1.5 * h):
            raise ValueError(
                f"cube center ({cx:.1f}, {cy:.1f}) is outside bbox {self.bbox} expanded by 50%"
            )


@dataclass
class EvalReport:
    yaw_mae: float
    pitch_mae: float
    roll_mae: float
    mean_mae: float
    count: int
    subset: str

    def to_json_dict(self) -> dict:
        return {
            "subset": self.subset,
            "count": self.count,
            "yaw_mae": self.yaw_mae,
            "pitch_mae": self.pitch_mae,
            "roll_mae": self.roll_mae,
            "mean_mae": self.mean_mae,
        }

    def to_table(self) -> str:
        header = f"{'subset':<10}{'count':>8}{'yaw_mae':>12}{'pitch_mae':>12}{'roll_mae':>12}{'mean_mae':>12}"
        row = (
            f"{self.subset:<10}{self.count:>8d}"
            f"{self.yaw_mae:>12.6f}{self.pitch_mae:>12.6f}{self.roll_mae:>12.6f}{self.mean_mae:>12.6f}"
        )
        return header + "\n" + row


def label_to_cube(label: HeadLabel) -> CubeLabel:
    """Convert a head label to its cube label.

    The cube is projected about the bbox center with edge length
    ``label.head_size`` (default ``min(w, h)``).  If a nose landmark is given,
    the whole cube is translated so the projected center of its front face
    (the +w face) lands on the nose; translation never changes the pose.  The
    dims are the cube's true relative diagonal lengths, which make the
    edge-adjustment length regulation exact.
    """
    x, y, w, h = label.bbox
    center = np.array([x + w / 2.0, y + h / 2.0])
    edge = label.head_size if label.head_size is not None else min(w, h)
    cube = euler2cube(label.pose, center, edge)
    if label.nose is not None:
        axes, _ = cube_to_axes(cube)
        anchor = center + axes.w / 2.0
        shift = label.nose - anchor
        cube = Cube2D(cube.center + shift, cube.vertices + shift)
    return CubeLabel(label.image_id, cube, label.bbox, cube_rel_dims(cube))


# --------------------------------------------------------------------------
# Ground-truth map rendering


def gaussian_radius(height: float, width: float, min_overlap: float = 0.7) -> float:
    """Splat radius (cells) keeping IoU >= min_overlap for a shifted box.

    Smallest of the three quadratic-bound cases for a ``height x width`` box.
    """
    a1 = 1.0
    b1 = height + width
    c1 = width * height * (1.0 - min_overlap) / (1.0 + min_overlap)
    r1 = (b1 + math.sqrt(b1 * b1 - 4.0 * a1 * c1)) / 2.0

    a2 = 4.0
    b2 = 2.0 * (height + width)
    c2 = (1.0 - min_overlap) * width * height
    r2 = (b2 + math.sqrt(b2 * b2 - 4.0 * a2 * c2)) / 2.0

    a3 = 4.0 * min_overlap
    b3 = -2.0 * min_overlap * (height + width)
    c3 = (min_overlap - 1.0) * width * height
    r3 = (b3 + math.sqrt(b3 * b3 - 4.0 * a3 * c3)) / 2.0
    return min(r1, r2, r3)


def draw_gaussian(heat: np.ndarray, cx: int, cy: int, radius: int, sigma: float) -> None:
    """Max-combine an unnormalized Gaussian (peak exactly 1) into ``heat``."""
    h, w = heat.shape
    span = np.arange(-radius, radius + 1, dtype=np.float64)
    gx, gy = np.meshgrid(span, span)
    patch = np.exp(-(gx * gx + gy * gy) / (2.0 * sigma * sigma)).astype(heat.dtype)
    left, right = min(cx, radius), min(w - cx, radius + 1)
    top, bottom = min(cy, radius), min(h - cy, radius + 1)
    if left + right <= 0 or top + bottom <= 0:
        return
    view = heat[cy - top : cy + bottom, cx - left : cx + right]
    np.maximum(view, patch[radius - top : radius + bottom, radius - left : radius + right], out=view)


def _splat_sigma(bbox, stride: int, sigma_policy) -> tuple[int, float]:
    if isinstance(sigma_policy, (int, float)):
        sigma = float(sigma_policy)
        if sigma <= 0.0:
            raise ValueError(f"fixed sigma must be positive, got {sigma}")
        return max(1, int(math.ceil(3.0 * sigma))), sigma
    if sigma_policy != "centernet":
        raise ValueError(f"unknown sigma policy: {sigma_policy!r}")
    _, _, w, h = bbox
    radius = gaussian_radius(math.ceil(h / stride), math.ceil(w / stride))
    radius = max(1, int(radius))
    return radius, (2.0 * radius + 1.0) / 6.0


def render_targets(
    labels: list[CubeLabel],
    image_size: tuple[int, int],
    stride: int = 4,
    sigma_policy="centernet",
) -> TensorMaps:
    """Render ground-truth maps for a list of cube labels.

    ``image_size`` is (width, height) in pixels; map cells are
    ``ceil(size / stride)``.  Centers and vertices are splatted as peak-1
    Gaussians (max-combined across labels); exact sub-cell offsets are written
    at each splat's integer cell, displacements (integer cell differences) at
    the center cell, and box size / dims at the center cell.  Out-of-bounds
    positions are clamped to the map border, with the clamp remainder folded
    into the offset so decoding stays exact.

    Keypoint sub-cell offsets are shared across the eight channels; two
    keypoints landing in the same cell overwrite each other's offset, so
    recovery is exact only while distinct keypoints occupy distinct cells.
    """
    width, height = image_size
    if width <= 0 or height <= 0:
        raise ValueError(f"image size must be positive, got {image_size}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    map_w = math.ceil(width / stride)
    map_h = math.ceil(height / stride)
    maps = TensorMaps.zeros(map_h, map_w, stride)

    def to_cell(px: np.ndarray) -> tuple[int, int, np.ndarray]:
        pos = px / stride
        cx = int(min(max(math.floor(pos[0]), 0), map_w - 1))
        cy = int(min(max(math.floor(pos[1]), 0), map_h - 1))
        return cx, cy, pos - (cx, cy)

    for label in labels:
        radius, sigma = _splat_sigma(label.bbox, stride, sigma_policy)
        ccx, ccy, coff = to_cell(label.cube.center)
        draw_gaussian(maps.center_heat, ccx, ccy, radius, sigma)
        maps.center_off[ccy, ccx] = coff
        maps.box_size[ccy, ccx] = (label.bbox[2] / stride, label.bbox[3] / stride)
        maps.dims[ccy, ccx] = label.dims.d
        for i, vertex in enumerate(label.cube.vertices):
            vcx, vcy, voff = to_cell(vertex)
            draw_gaussian(maps.kp_heat[:, :, i], vcx, vcy, radius, sigma)
            maps.kp_off[vcy, vcx] = voff
            maps.kp_disp[ccy, ccx, 2 * i : 2 * i + 2] = (vcx - ccx, vcy - ccy)
    return maps


# --------------------------------------------------------------------------
# Metrics


def evaluate(preds, gts, subset: str = "all") -> EvalReport:
    """Wrap-aware per-angle MAE between matched predictions and ground truth.

    ``preds`` and ``gts`` are sequences of ``(image_id, EulerPose)``; every
    prediction must have a ground-truth partner (one head per image id).
    ``subset="frontal"`` keeps only pairs whose ground-truth |yaw| < 90
    (boundary excluded).
    """
    if subset not in ("all", "frontal"):
        raise ValueError(f"subset must be 'all' or 'frontal', got {subset!r}")
    gt_by_id: dict[str, EulerPose] = {}
    for image_id, pose in gts:
        if image_id in gt_by_id:
            raise ValueError(f"duplicate ground-truth image_id {image_id!r}")
        gt_by_id[image_id] = pose
    seen: set[str] = set()
    for image_id, _ in preds:
        if image_id in seen:
            raise ValueError(f"duplicate prediction image_id {image_id!r}")
        seen.add(image_id)
    missing = [image_id for image_id in seen if image_id not in gt_by_id]
    if missing:
        raise ValueError(f"predictions without ground truth: {sorted(missing)}")
    pairs = []
    for image_id, pose in preds:
        gt = gt_by_id[image_id]
        if subset == "frontal" and not abs(wrap_angle(gt.yaw)) < 90.0:
            continue
        pairs.append((canonicalize(pose), canonicalize(gt)))
    if not pairs:
        raise ValueError(f"no matched pairs to evaluate (subset={subset!r})")
    n = len(pairs)
    yaw = math.fsum(angle_diff(p.yaw, g.yaw) for p, g in pairs) / n
    pitch = math.fsum(angle_diff(p.pitch, g.pitch) for p, g in pairs) / n
    roll = math.fsum(angle_diff(p.roll, g.roll) for p, g in pairs) / n
    return EvalReport(yaw, pitch, roll, (yaw + pitch + roll) / 3.0, n, subset)


# --------------------------------------------------------------------------
# JSONL records


def head_label_to_dict(label: HeadLabel) -> dict:
    out = {
        "image_id": label.image_id,
        "bbox": list(label.bbox),
        "yaw": label.pose.yaw,
        "pitch": label.pose.pitch,
        "roll": label.pose.roll,
    }
    if label.nose is not None:
        out["nose"] = [float(label.nose[0]), float(label.nose[1])]
    if label.head_size is not None:
        out["l"] = label.head_size
    return out


def head_label_from_dict(record: dict) -> HeadLabel:
    try:
        return HeadLabel(
            image_id=str(record["image_id"]),
            bbox=tuple(record["bbox"]),
            pose=EulerPose(float(record["yaw"]), float(record["pitch"]), float(record["roll"])),
            nose=record.get("nose"),
            head_size=record.get("l"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"bad head label record: {exc}") from exc


def cube_label_to_dict(label: CubeLabel) -> dict:
    return {
        "image_id": label.image_id,
        "bbox": list(label.bbox),
        "center": [float(label.cube.center[0]), float(label.cube.center[1])],
        "vertices": [[float(x), float(y)] for x, y in label.cube.vertices],
        "dims": [float(d) for d in label.dims.d],
    }


def cube_label_from_dict(record: dict) -> CubeLabel:
    try:
        vertices = np.asarray(record["vertices"], dtype=np.float64)
        if vertices.shape != (8, 2):
            raise ValueError(f"expected 8 [x, y] vertices, got shape {vertices.shape}")
        return CubeLabel(
            image_id=str(record["image_id"]),
            cube=Cube2D(record["center"], vertices),
            bbox=tuple(record["bbox"]),
            dims=RelDims(record["dims"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"bad cube label record: {exc}") from exc


def pose_pred_to_dict(image_id: str, pose: EulerPose) -> dict:
    return {"image_id": image_id, "yaw": pose.yaw, "pitch": pose.pitch, "roll": pose.roll}


def pose_pred_from_dict(record: dict) -> tuple[str, EulerPose]:
    try:
        return str(record["image_id"]), EulerPose(
            float(record["yaw"]), float(record["pitch"]), float(record["roll"])
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"bad pose record: {exc}") from exc


def read_jsonl(fh, parse, source: str = "<jsonl>") -> list:
    """Parse every non-empty line of ``fh`` with ``parse``; errors carry line numbers."""
    out = []
    for lineno, raw in enumerate(fh, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            out.append(parse(json.loads(line)))
        except ValueError as exc:
            raise FileFormatError(f"{source}: line {lineno}: {exc}") from exc
    return out


def write_jsonl(fh, records: list[dict]) -> None:
    for record in records:
        fh.write(json.dumps(record) + "\n")


def read_head_labels(path) -> list[HeadLabel]:
    with open(path, "r", encoding="utf-8") as fh:
        return read_jsonl(fh, head_label_from_dict, source=str(path))


def write_head_labels(path, labels: list[HeadLabel]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_jsonl(fh, [head_label_to_dict(lab) for lab in labels])


def read_cube_labels(path) -> list[CubeLabel]:
    with open(path, "r", encoding="utf-8") as fh:
        return read_jsonl(fh, cube_label_from_dict, source=str(path))


def write_cube_labels(path, labels: list[CubeLabel]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_jsonl(fh, [cube_label_to_dict(lab) for lab in labels])


def read_pose_preds(path) -> list[tuple[str, EulerPose]]:
    with open(path, "r", encoding="utf-8") as fh:
        return read_jsonl(fh, pose_pred_from_dict, source=str(path))


def write_pose_preds(path, preds: list[tuple[str, EulerPose]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_jsonl(fh, [pose_pred_to_dict(i, p) for i, p in preds])


# --------------------------------------------------------------------------
# Tensor container

_TMAP_FORMAT = "tmap-v1"
_TENSOR_ORDER = (
    "center_heat",
    "center_off",
    "box_size",
    "kp_heat",
    "kp_off",
    "kp_disp",
    "dims",
)


def write_tensor_file(path, tensors: dict[str, np.ndarray], meta: dict | None = None) -> None:
    """Write named float32 tensors to a ``.tmap`` container."""
    sections: list[tuple[str, bytes]] = []
    for name, arr in tensors.items():
        a = np.asarray(arr, dtype=np.float32)
        if a.ndim == 2:
            a = a[:, :, None]
        if a.ndim != 3:
            raise ValueError(f"tensor {name!r} must be 2D or 3D, got shape {a.shape}")
        header = json.dumps(
            {
                "shape": list(a.shape),
                "dtype": "f32",
                "order": "row-major",
                "byte_order": "little",
            },
            separators=(",", ":"),
        )
        sections.append((name, header.encode("utf-8") + b"\n" + a.astype("<f4").tobytes(order="C")))
    offsets: dict[str, list[int]] = {}
    position = 0
    for name, blob in sections:
        offsets[name] = [position, len(blob)]
        position += len(blob)
    manifest: dict = {"format": _TMAP_FORMAT, "tensors": offsets}
    if meta:
        manifest["meta"] = meta
    with open(path, "wb") as fh:
        fh.write(json.dumps(manifest, separators=(",", ":")).encode("utf-8") + b"\n")
        for _, blob in sections:
            fh.write(blob)


def read_tensor_file(path) -> tuple[dict[str, np.ndarray], dict]:
    """Read a ``.tmap`` container; returns (tensors, meta)."""
    with open(path, "rb") as fh:
        data = fh.read()
    newline = data.find(b"\n")
    if newline < 0:
        raise FileFormatError(f"{path}: missing manifest line")
    try:
        manifest = json.loads(data[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FileFormatError(f"{path}: bad manifest: {exc}") from exc
    if manifest.get("format") != _TMAP_FORMAT:
        raise FileFormatError(f"{path}: unsupported format {manifest.get('format')!r}")
    base = newline + 1
    tensors: dict[str, np.ndarray] = {}
    for name, (offset, length) in manifest.get("tensors", {}).items():
        blob = data[base + offset : base + offset + length]
        if len(blob) != length:
            raise FileFormatError(
                f"{path}: tensor {name!r}: expected {length} bytes, got {len(blob)}"
            )
        header_end = blob.find(b"\n")
        if header_end < 0:
            raise FileFormatError(f"{path}: tensor {name!r}: missing section header")
        try:
            header = json.loads(blob[:header_end].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise FileFormatError(f"{path}: tensor {name!r}: bad header: {exc}") from exc
        if (
            header.get("dtype") != "f32"
            or header.get("order") != "row-major"
            or header.get("byte_order") != "little"
        ):
            raise FileFormatError(f"{path}: tensor {name!r}: unsupported layout {header}")
        shape = tuple(int(s) for s in header["shape"])
        expected = int(np.prod(shape)) * 4
        payload = blob[header_end + 1 :]
        if len(payload) != expected:
            raise FileFormatError(
                f"{path}: tensor {name!r}: expected {expected} payload bytes, got {len(payload)}"
            )
        tensors[name] = np.frombuffer(payload, dtype="<f4").reshape(shape).copy()
    return tensors, manifest.get("meta", {})


def write_tensor_maps(path, maps: TensorMaps, image_id: str | None = None) -> None:
    meta: dict = {"stride": maps.stride}
    if image_id is not None:
        meta["image_id"] = image_id
    write_tensor_file(path, {name: getattr(maps, name) for name in _TENSOR_ORDER}, meta)


def read_tensor_maps(path) -> tuple[TensorMaps, dict]:
    tensors, meta = read_tensor_file(path)
    missing = [name for name in _TENSOR_ORDER if name not in tensors]
    if missing:
        raise FileFormatError(f"{path}: missing tensors: {missing}")
    if "stride" not in meta:
        raise FileFormatError(f"{path}: meta is missing the stride")
    maps = TensorMaps(
        stride=int(meta["stride"]),
        center_heat=tensors["center_heat"][:, :, 0],
        center_off=tensors["center_off"],
        box_size=tensors["box_size"],
        kp_heat=tensors["kp_heat"],
        kp_off=tensors["kp_off"],
        kp_disp=tensors["kp_disp"],
        dims=tensors["dims"],
    )
    maps.validate()
    return maps, meta
