"""Command-line interface: cube label tooling, decoding, metrics, benchmark.

Every subcommand is a pure function of its input files and flags.  Data goes
to the named files (``-`` for stdin/stdout); diagnostics go to stderr.  Exit
codes: 0 success, 1 partial failure under ``--strict``, 2 usage error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bench import BenchConfig, report_to_json, run_benchmark
from .datasets import (
    cube_label_from_dict,
    cube_label_to_dict,
    evaluate,
    head_label_from_dict,
    label_to_cube,
    pose_pred_from_dict,
    pose_pred_to_dict,
    read_tensor_maps,
    render_targets,
)
from .decoding import DecodeConfig, decode_pose
from .errors import CubePoseError, FileFormatError
from .fitting import cube_rel_dims, edge_adjust, parallelism_residual, rectify_orthoscale
from .projection import (
    cube2euler_matrix,
    cube2euler_ratios,
    delta_of_cube,
    euler2cube,
)
from .rotation import EulerPose, angle_diff, canonicalize

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _warn(message: str) -> None:
    print(f"cubepose: {message}", file=sys.stderr)


def _open_read(path: str):
    if path == "-":
        return sys.stdin, False
    return open(path, "r", encoding="utf-8"), True


def _open_write(path: str):
    if path == "-":
        return sys.stdout, False
    return open(path, "w", encoding="utf-8"), True


def _jsonl_lines(fh):
    for lineno, raw in enumerate(fh, start=1):
        line = raw.strip()
        if line:
            yield lineno, line


def _per_line(args, in_path: str, out_path: str, transform) -> int:
    """Apply ``transform`` (dict -> dict) per line with line-level recovery."""
    failures = 0
    fin, close_in = _open_read(in_path)
    try:
        fout, close_out = _open_write(out_path)
        try:
            for lineno, line in _jsonl_lines(fin):
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    _warn(f"{in_path}: line {lineno}: {exc}")
                    failures += 1
                    continue
                try:
                    result = transform(record)
                except (ValueError, CubePoseError) as exc:
                    _warn(f"{in_path}: line {lineno}: {exc}")
                    failures += 1
                    continue
                fout.write(json.dumps(result) + "\n")
        finally:
            if close_out:
                fout.close()
    finally:
        if close_in:
            fin.close()
    if failures:
        _warn(f"{failures} line(s) failed")
        return EXIT_PARTIAL if args.strict else EXIT_OK
    return EXIT_OK


def cmd_convert(args) -> int:
    def transform(record):
        return cube_label_to_dict(label_to_cube(head_label_from_dict(record)))

    return _per_line(args, args.input, args.output, transform)


def _apply_adjustment(label, how: str):
    if how == "edge":
        return edge_adjust(label.cube, label.dims)
    if how == "rectify":
        return rectify_orthoscale(label.cube)[0]
    return label.cube


def cmd_invert(args) -> int:
    dumped = []

    def transform(record):
        label = cube_label_from_dict(record)
        cube = _apply_adjustment(label, args.adjust)
        if args.dump_cubes:
            out = cube_label_to_dict(label)
            out["center"] = [float(cube.center[0]), float(cube.center[1])]
            out["vertices"] = [[float(x), float(y)] for x, y in cube.vertices]
            dumped.append(out)
        pose = cube2euler_ratios(cube) if args.method == "ratios" else cube2euler_matrix(cube)
        return pose_pred_to_dict(label.image_id, pose)

    code = _per_line(args, args.input, args.output, transform)
    if args.dump_cubes:
        with open(args.dump_cubes, "w", encoding="utf-8") as fh:
            for record in dumped:
                fh.write(json.dumps(record) + "\n")
    return code


def cmd_adjust(args) -> int:
    def transform(record):
        label = cube_label_from_dict(record)
        cube = _apply_adjustment(label, args.method)
        out = cube_label_to_dict(label)
        out["center"] = [float(cube.center[0]), float(cube.center[1])]
        out["vertices"] = [[float(x), float(y)] for x, y in cube.vertices]
        return out

    return _per_line(args, args.input, args.output, transform)


def cmd_decode(args) -> int:
    maps, meta = read_tensor_maps(args.input)
    cfg = DecodeConfig.from_file(args.config) if args.config else DecodeConfig()
    image_id = args.image_id or meta.get("image_id") or Path(args.input).stem
    detections = decode_pose(maps, cfg)
    fout, close_out = _open_write(args.output)
    failures = 0
    try:
        for index, det in enumerate(detections):
            name = image_id if index == 0 else f"{image_id}#{index}"
            if det.error is not None or det.pose is None:
                _warn(f"{name}: {det.error or 'no pose decoded'}")
                failures += 1
                continue
            fout.write(json.dumps(pose_pred_to_dict(name, det.pose)) + "\n")
    finally:
        if close_out:
            fout.close()
    if failures and args.strict:
        return EXIT_PARTIAL
    return EXIT_OK


def _read_poses(path: str):
    fin, close_in = _open_read(path)
    try:
        out = []
        for lineno, line in _jsonl_lines(fin):
            try:
                out.append(pose_pred_from_dict(json.loads(line)))
            except (json.JSONDecodeError, ValueError) as exc:
                raise FileFormatError(f"{path}: line {lineno}: {exc}") from exc
        return out
    finally:
        if close_in:
            fin.close()


def cmd_eval(args) -> int:
    preds = _read_poses(args.preds)
    gts = _read_poses(args.gts)
    report = evaluate(preds, gts, subset=args.subset)
    fout, close_out = _open_write(args.output)
    try:
        if args.format == "json":
            fout.write(json.dumps(report.to_json_dict()) + "\n")
        else:
            fout.write(report.to_table() + "\n")
    finally:
        if close_out:
            fout.close()
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.config:
        cfg = BenchConfig.from_file(args.config)
    else:
        cfg = BenchConfig()
    if args.seed is not None or args.samples is not None or args.workers is not None:
        overrides = {
            "seed": args.seed if args.seed is not None else cfg.seed,
            "n_samples": args.samples if args.samples is not None else cfg.n_samples,
            "workers": args.workers if args.workers is not None else cfg.workers,
        }
        cfg = BenchConfig(
            pose_range=cfg.pose_range,
            noise_sigmas=cfg.noise_sigmas,
            decoders=cfg.decoders,
            mode=cfg.mode,
            decode=cfg.decode,
            **overrides,
        )
    report = run_benchmark(cfg)
    fout, close_out = _open_write(args.csv)
    try:
        fout.write(report.to_csv())
    finally:
        if close_out:
            fout.close()
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(report_to_json(report))
    return EXIT_OK


def _selftest_checks():
    rng = np.random.default_rng(20240)

    def poses(n):
        for _ in range(n):
            yield canonicalize(
                EulerPose(
                    180.0 - rng.uniform(0.0, 360.0),
                    rng.uniform(-89.0, 89.0),
                    180.0 - rng.uniform(0.0, 360.0),
                )
            )

    def check_round_trip():
        for pose in poses(2000):
            cube = euler2cube(pose, rng.uniform(-100, 100, 2), rng.uniform(1.0, 300.0))
            got = cube2euler_matrix(cube)
            if max(angle_diff(a, b) for a, b in zip(got.as_tuple(), pose.as_tuple())) > 1e-6:
                return f"round trip off for {pose}"
        return None

    def check_delta_range():
        for pose in poses(2000):
            try:
                delta = delta_of_cube(euler2cube(pose, (0, 0), 50.0))
            except CubePoseError:
                continue
            if not 0.0 <= delta <= 2.0:
                return f"delta {delta} out of range for {pose}"
            if abs(delta - (1.0 - np.cos(np.radians(2 * pose.yaw)))) > 1e-9:
                return f"delta identity broken for {pose}"
        return None

    def check_duality():
        from .fitting import dual_hexahedron, dual_octahedron

        for pose in poses(2000):
            cube = euler2cube(pose, rng.uniform(-50, 50, 2), rng.uniform(2.0, 120.0))
            back = dual_hexahedron(dual_octahedron(cube))
            if np.abs(back.vertices - cube.vertices).max() > 1e-12:
                return f"duality identity broken for {pose}"
        return None

    def check_edge_adjust():
        from .projection import Cube2D

        for pose in poses(200):
            cube = euler2cube(pose, (0, 0), 100.0)
            noisy = Cube2D(cube.center, cube.vertices + rng.normal(0, 3.0, (8, 2)))
            adjusted = edge_adjust(noisy, cube_rel_dims(cube))
            if parallelism_residual(adjusted) > 1e-9:
                return f"edge adjust not parallel for {pose}"
        return None

    def check_render_decode():
        from .datasets import HeadLabel, label_to_cube

        for index, pose in enumerate(poses(5)):
            size = rng.uniform(60.0, 100.0)
            cx, cy = rng.uniform(110.0, 210.0, 2)
            label = HeadLabel(f"t{index}", (cx - size / 2, cy - size / 2, size, size), pose)
            cube_label = label_to_cube(label)
            maps = render_targets([cube_label], (320, 320), stride=4)
            detections = decode_pose(maps, DecodeConfig())
            if len(detections) != 1 or detections[0].pose is None:
                return f"render/decode lost the head for {pose}"
            got = detections[0].pose
            want = cube2euler_matrix(cube_label.cube)
            if max(angle_diff(a, b) for a, b in zip(got.as_tuple(), want.as_tuple())) > 0.1:
                return f"render/decode pose off for {pose}"
        return None

    return [
        ("matrix round trip", check_round_trip),
        ("delta range", check_delta_range),
        ("duality identity", check_duality),
        ("edge adjust parallelism", check_edge_adjust),
        ("render/decode identity", check_render_decode),
    ]


def cmd_selftest(args) -> int:
    del args
    failed = 0
    for name, check in _selftest_checks():
        message = check()
        if message is None:
            print(f"selftest: {name}: ok")
        else:
            print(f"selftest: {name}: FAIL ({message})")
            failed += 1
    return EXIT_PARTIAL if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cubepose",
        description="Head-pose cube tooling: convert, invert, adjust, decode, eval, bench.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="labels.jsonl -> cubes.jsonl")
    p.add_argument("input", help="head labels (JSONL, - for stdin)")
    p.add_argument("output", help="cube labels (JSONL, - for stdout)")
    p.add_argument("--strict", action="store_true", help="exit 1 when any line fails")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("invert", help="cubes.jsonl -> preds.jsonl")
    p.add_argument("input", help="cube labels (JSONL, - for stdin)")
    p.add_argument("output", help="pose predictions (JSONL, - for stdout)")
    p.add_argument("--method", choices=("matrix", "ratios"), default="matrix")
    p.add_argument("--adjust", choices=("none", "edge", "rectify"), default="none")
    p.add_argument("--dump-cubes", metavar="PATH", help="also write the adjusted cubes")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("adjust", help="cubes.jsonl -> adjusted cubes.jsonl")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--method", choices=("edge", "rectify"), default="edge")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_adjust)

    p = sub.add_parser("decode", help="maps.tmap -> preds.jsonl")
    p.add_argument("input", help="tensor container (.tmap)")
    p.add_argument("output", help="pose predictions (JSONL, - for stdout)")
    p.add_argument("--config", help="decode config (key=value file)")
    p.add_argument("--image-id", help="override the prediction image id")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("eval", help="wrap-aware MAE of predictions against ground truth")
    p.add_argument("preds", help="pose predictions (JSONL)")
    p.add_argument("gts", help="ground truth (labels or preds JSONL)")
    p.add_argument("--subset", choices=("all", "frontal"), default="all")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.add_argument("--output", default="-", help="report destination (default stdout)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="seeded synthetic decoder benchmark")
    p.add_argument("--config", help="bench config (key=value file)")
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--csv", default="-", help="CSV destination (default stdout)")
    p.add_argument("--json", help="also write the full JSON report")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("selftest", help="run the noise-free invariant suite")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileFormatError as exc:
        _warn(str(exc))
        return EXIT_PARTIAL
    except (ValueError, CubePoseError) as exc:
        _warn(str(exc))
        return EXIT_PARTIAL
    except OSError as exc:
        _warn(str(exc))
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
