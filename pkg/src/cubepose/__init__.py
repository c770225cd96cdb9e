"""Head pose as an orthographically projected 2D cube.

Closed-form conversions between Euler angles and eight projected cube
vertices, dual-octahedron edge adjustment, dense-map decoding, label tooling,
and a deterministic synthetic benchmark.
"""

from .bench import (
    BenchCell,
    BenchConfig,
    BenchReport,
    RNG_NAME,
    perturb_cube,
    report_to_json,
    run_benchmark,
    sample_pose,
    sample_rng,
)
from .datasets import (
    CubeLabel,
    EvalReport,
    HeadLabel,
    evaluate,
    gaussian_radius,
    label_to_cube,
    read_cube_labels,
    read_head_labels,
    read_pose_preds,
    read_tensor_file,
    read_tensor_maps,
    render_targets,
    write_cube_labels,
    write_head_labels,
    write_pose_preds,
    write_tensor_file,
    write_tensor_maps,
)
from .decoding import (
    DecodeConfig,
    Detection,
    TensorMaps,
    decode_centers,
    decode_keypoints,
    decode_pose,
    nms_peaks,
)
from .errors import (
    CubePoseError,
    DegenerateCubeError,
    FileFormatError,
    NotARotationError,
    ProjectionConstraintError,
    RatioPathSingularError,
)
from .fitting import (
    Octa2D,
    RelDims,
    cube_rel_dims,
    dual_hexahedron,
    dual_octahedron,
    edge_adjust,
    parallelism_residual,
    rectify_orthoscale,
    regulate_diagonals,
)
from .projection import (
    AxisProjection,
    Cube2D,
    axes_to_cube,
    cube2euler_matrix,
    cube2euler_ratios,
    cube_to_axes,
    delta_of_cube,
    euler2cube,
    euler_to_axes,
    projection_residual,
)
from .rotation import (
    EulerPose,
    angle_diff,
    canonicalize,
    euler_to_matrix,
    matrix_to_euler,
    wrap_angle,
)

__version__ = "0.1.0"

__all__ = [
    "AxisProjection",
    "BenchCell",
    "BenchConfig",
    "BenchReport",
    "Cube2D",
    "CubeLabel",
    "CubePoseError",
    "DecodeConfig",
    "DegenerateCubeError",
    "Detection",
    "EulerPose",
    "EvalReport",
    "FileFormatError",
    "HeadLabel",
    "NotARotationError",
    "Octa2D",
    "ProjectionConstraintError",
    "RNG_NAME",
    "RatioPathSingularError",
    "RelDims",
    "TensorMaps",
    "angle_diff",
    "axes_to_cube",
    "canonicalize",
    "cube2euler_matrix",
    "cube2euler_ratios",
    "cube_rel_dims",
    "cube_to_axes",
    "decode_centers",
    "decode_keypoints",
    "decode_pose",
    "delta_of_cube",
    "dual_hexahedron",
    "dual_octahedron",
    "edge_adjust",
    "euler2cube",
    "euler_to_axes",
    "euler_to_matrix",
    "evaluate",
    "gaussian_radius",
    "label_to_cube",
    "matrix_to_euler",
    "nms_peaks",
    "parallelism_residual",
    "perturb_cube",
    "projection_residual",
    "read_cube_labels",
    "read_head_labels",
    "read_pose_preds",
    "read_tensor_file",
    "read_tensor_maps",
    "rectify_orthoscale",
    "regulate_diagonals",
    "render_targets",
    "report_to_json",
    "run_benchmark",
    "sample_pose",
    "sample_rng",
    "wrap_angle",
    "write_cube_labels",
    "write_head_labels",
    "write_pose_preds",
    "write_tensor_file",
    "write_tensor_maps",
]
