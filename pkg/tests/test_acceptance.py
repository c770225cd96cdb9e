"""Acceptance suite: one test per release criterion, each printing a verdict.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the verdict lines.
"""

import time
from pathlib import Path

import numpy as np

from cubepose.bench import BenchConfig, run_benchmark
from cubepose.datasets import HeadLabel, evaluate, label_to_cube, render_targets
from cubepose.decoding import DecodeConfig, decode_pose
from cubepose.errors import CubePoseError
from cubepose.fitting import RelDims, dual_hexahedron, dual_octahedron, edge_adjust, parallelism_residual
from cubepose.projection import (
    Cube2D,
    cube2euler_matrix,
    cube2euler_ratios,
    cube_to_axes,
    delta_of_cube,
    euler2cube,
)
from cubepose.rotation import EulerPose, angle_diff, canonicalize

N_POSES = 10_000
SEED = 20_240_817


def _verdict(num: int, ok: bool, desc: str) -> None:
    print(f"\n[criterion {num}] {'PASS' if ok else 'FAIL'}: {desc}")
    assert ok, f"criterion {num} failed: {desc}"


def _sample_full_poses(n, rng):
    yaws = 180.0 - rng.uniform(0.0, 360.0, n)
    pitches = rng.uniform(-89.0, 89.0, n)
    rolls = 180.0 - rng.uniform(0.0, 360.0, n)
    return [EulerPose(float(y), float(p), float(r)) for y, p, r in zip(yaws, pitches, rolls)]


def _max_err(a: EulerPose, b: EulerPose) -> float:
    return max(angle_diff(x, y) for x, y in zip(a.as_tuple(), b.as_tuple()))


def test_criterion_1_round_trip_exactness():
    rng = np.random.default_rng(SEED)
    poses = _sample_full_poses(N_POSES, rng)
    edge = 64.0
    center = (7.0, -3.0)
    start = time.perf_counter()
    worst_matrix = 0.0
    worst_ratio = 0.0
    ratio_checked = 0
    for pose in poses:
        want = canonicalize(pose)
        cube = euler2cube(want, center, edge)
        worst_matrix = max(worst_matrix, _max_err(cube2euler_matrix(cube), want))
        axes, _ = cube_to_axes(cube)
        uy, vy, wy = axes.u[1] / edge, axes.v[1] / edge, axes.w[1] / edge
        if min(abs(uy), abs(vy), abs(wy)) > 1e-3:
            k1 = axes.u[0] / axes.u[1]
            k2 = axes.v[0] / axes.v[1]
            k3 = axes.w[0] / axes.w[1]
            if abs((k1 - k3) * (k2 - k3)) > 1e-3:
                ratio_checked += 1
                worst_ratio = max(worst_ratio, _max_err(cube2euler_ratios(cube), want))
    elapsed = time.perf_counter() - start
    ok = worst_matrix < 1e-6 and worst_ratio < 1e-4 and elapsed < 5.0 and ratio_checked > N_POSES // 4
    _verdict(
        1,
        ok,
        f"round trip over {N_POSES} full-view poses: matrix path max err "
        f"{worst_matrix:.2e} deg (tol 1e-6), ratio path max err {worst_ratio:.2e} deg "
        f"(tol 1e-4, {ratio_checked} poses past the denominator guard), {elapsed:.2f}s (< 5s)",
    )


def test_criterion_2_delta_range_and_identity():
    rng = np.random.default_rng(SEED)
    poses = _sample_full_poses(N_POSES, rng)
    violations = 0
    worst_gap = 0.0
    checked = 0
    for pose in poses:
        want = canonicalize(pose)
        cube = euler2cube(want, (7.0, -3.0), 64.0)
        try:
            delta = delta_of_cube(cube)
        except CubePoseError:
            violations += 1
            continue
        checked += 1
        if not 0.0 <= delta <= 2.0:
            violations += 1
        worst_gap = max(worst_gap, abs(delta - (1.0 - np.cos(np.radians(2.0 * want.yaw)))))
    ok = violations == 0 and worst_gap < 1e-9 and checked == N_POSES
    _verdict(
        2,
        ok,
        f"delta in [0,2] for all {checked}/{N_POSES} poses with {violations} violations; "
        f"max |delta - (1 - cos 2y)| = {worst_gap:.2e} (tol 1e-9)",
    )


def test_criterion_3_duality_identity_and_parallelism():
    rng = np.random.default_rng(SEED + 1)
    worst_vertex = 0.0
    for _ in range(N_POSES):
        pose = canonicalize(
            EulerPose(
                180.0 - rng.uniform(0.0, 360.0),
                rng.uniform(-89.0, 89.0),
                180.0 - rng.uniform(0.0, 360.0),
            )
        )
        cube = euler2cube(pose, rng.uniform(-200.0, 200.0, 2), rng.uniform(5.0, 150.0))
        back = dual_hexahedron(dual_octahedron(cube))
        worst_vertex = max(worst_vertex, float(np.abs(back.vertices - cube.vertices).max()))
    worst_residual = 0.0
    for _ in range(2000):
        pose = canonicalize(EulerPose(rng.uniform(-180, 180), rng.uniform(-89, 89), rng.uniform(-180, 180)))
        cube = euler2cube(pose, (0.0, 0.0), 100.0)
        noisy = Cube2D(cube.center, cube.vertices + rng.normal(0.0, 5.0, (8, 2)))
        adjusted = edge_adjust(noisy, RelDims([1.0, 1.0, 1.0]))
        worst_residual = max(worst_residual, parallelism_residual(adjusted))
    ok = worst_vertex < 1e-12 and worst_residual < 1e-9
    _verdict(
        3,
        ok,
        f"dual-of-dual identity on {N_POSES} cubes: max vertex drift {worst_vertex:.2e} px "
        f"(tol 1e-12); edge-adjusted noisy cubes: max parallelism residual "
        f"{worst_residual:.2e} rad (tol 1e-9)",
    )


def test_criterion_4_edge_adjustment_benefit():
    start = time.perf_counter()
    cfg = BenchConfig(
        seed=42,
        n_samples=1000,
        pose_range="full",
        noise_sigmas=(0.02,),
        decoders=("raw", "edge_adjust"),
        mode="vertex-noise",
    )
    report = run_benchmark(cfg)
    elapsed = time.perf_counter() - start
    mae = {cell.decoder: cell.report.mean_mae for cell in report.cells}
    ok = mae["edge_adjust"] < mae["raw"] and elapsed < 10.0
    _verdict(
        4,
        ok,
        f"seed 42, n=1000, sigma=0.02: mean MAE edge_adjust {mae['edge_adjust']:.4f} deg "
        f"< raw {mae['raw']:.4f} deg (ordering only; absolute values are not comparable "
        f"to any trained system), {elapsed:.2f}s (< 10s)",
    )


def test_criterion_5_render_decode_identity():
    rng = np.random.default_rng(SEED + 2)
    worst_kp = 0.0
    worst_pose = 0.0
    for index in range(100):
        pose = canonicalize(
            EulerPose(
                180.0 - rng.uniform(0.0, 360.0),
                rng.uniform(-89.0, 89.0),
                180.0 - rng.uniform(0.0, 360.0),
            )
        )
        size = rng.uniform(60.0, 120.0)
        cx, cy = rng.uniform(110.0, 210.0, 2)
        label = label_to_cube(
            HeadLabel(f"h{index}", (cx - size / 2.0, cy - size / 2.0, size, size), pose)
        )
        maps = render_targets([label], (320, 320), stride=4)
        assert maps.center_heat.shape == (80, 80)
        detections = decode_pose(maps, DecodeConfig())
        assert len(detections) == 1 and detections[0].error is None
        det = detections[0]
        worst_kp = max(worst_kp, float(np.abs(det.keypoints - label.cube.vertices).max()))
        worst_pose = max(worst_pose, _max_err(det.pose, pose))

    # two heads in one map: both recovered, matched by center proximity
    la = label_to_cube(HeadLabel("a", (40.0, 40.0, 80.0, 80.0), EulerPose(25, 10, -5)))
    lb = label_to_cube(HeadLabel("b", (200.0, 200.0, 80.0, 80.0), EulerPose(-120, -30, 60)))
    maps = render_targets([la, lb], (320, 320), stride=4)
    detections = decode_pose(maps, DecodeConfig())
    multi_ok = len(detections) == 2
    if multi_ok:
        for label in (la, lb):
            nearest = min(
                detections, key=lambda d: float(np.linalg.norm(d.center - label.cube.center))
            )
            multi_ok &= float(np.abs(nearest.keypoints - label.cube.vertices).max()) < 0.5
            multi_ok &= _max_err(nearest.pose, cube2euler_matrix(label.cube)) < 0.1

    ok = worst_kp < 0.5 and worst_pose < 0.1 and multi_ok
    _verdict(
        5,
        ok,
        f"render/decode on 100 single-head 80x80 maps: max keypoint err {worst_kp:.3e} px "
        f"(tol 0.5), max pose err {worst_pose:.3e} deg (tol 0.1); two-head map recovered: {multi_ok}",
    )


def test_criterion_6_metric_correctness():
    wrap = evaluate(
        [("a", EulerPose(179.0, 0.0, 0.0))], [("a", EulerPose(-179.0, 0.0, 0.0))]
    )
    hand = evaluate(
        [
            ("a", EulerPose(5.0, 1.0, 0.0)),
            ("b", EulerPose(10.0, 2.0, 0.0)),
            ("c", EulerPose(15.0, 3.0, 0.0)),
        ],
        [
            ("a", EulerPose(0.0, 0.0, 0.0)),
            ("b", EulerPose(0.0, 0.0, 0.0)),
            ("c", EulerPose(0.0, 0.0, 0.0)),
        ],
    )
    frontal = evaluate(
        [("a", EulerPose(0, 0, 0)), ("b", EulerPose(0, 0, 0)), ("c", EulerPose(0, 0, 0))],
        [
            ("a", EulerPose(89.0, 0, 0)),
            ("b", EulerPose(90.0, 0, 0)),
            ("c", EulerPose(-95.0, 0, 0)),
        ],
        subset="frontal",
    )
    ok = (
        wrap.yaw_mae == 2.0
        and wrap.mean_mae == 2.0 / 3.0
        and hand.yaw_mae == 10.0
        and hand.pitch_mae == 2.0
        and hand.mean_mae == 4.0
        and frontal.count == 1
        and frontal.yaw_mae == 89.0
    )
    _verdict(
        6,
        ok,
        "evaluate reproduces hand-computed MAEs exactly (wrap case 179 vs -179 -> 2 deg; "
        "frontal subset keeps |yaw| < 90 with the boundary excluded)",
    )


def test_criterion_7_determinism():
    cfg = dict(seed=42, n_samples=200, pose_range="full", noise_sigmas=(0.0, 0.02))
    csv_a = run_benchmark(BenchConfig(**cfg, workers=1)).to_csv()
    csv_b = run_benchmark(BenchConfig(**cfg, workers=1)).to_csv()
    csv_c = run_benchmark(BenchConfig(**cfg, workers=2)).to_csv()
    label = label_to_cube(HeadLabel("d", (90.0, 70.0, 96.0, 104.0), EulerPose(25, -10, 40)))
    maps = render_targets([label], (320, 320), stride=4)
    d1 = decode_pose(maps, DecodeConfig())
    d2 = decode_pose(maps, DecodeConfig())
    decode_ok = (
        len(d1) == len(d2) == 1
        and np.array_equal(d1[0].keypoints, d2[0].keypoints)
        and d1[0].pose == d2[0].pose
    )
    ok = csv_a == csv_b and csv_a == csv_c and decode_ok
    _verdict(
        7,
        ok,
        "benchmark CSV is byte-identical across repeated runs and across worker counts; "
        "decode output is a deterministic function of (maps, config)",
    )


def test_criterion_8_unreproduced_numbers_documented():
    readme = Path(__file__).resolve().parent.parent / "README.md"
    text = readme.read_text(encoding="utf-8")
    ok = "trained network weights" in text and "not reproduce" in text
    _verdict(
        8,
        ok,
        "README states that published dataset MAE tables require trained network weights "
        "and datasets, and that this artifact validates properties 1-7 instead",
    )
