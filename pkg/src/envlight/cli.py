"""Command-line front end.

Subcommands map one-to-one onto the library's experiment surfaces:

  simulate --config cfg.json --out DIR     run a scenario end to end
  coverage --setup SPEC [--setup SPEC]...  sphere-coverage table + ratios
  energy [--table rows.csv]                fit the battery-rate model
  metrics (--psnr | --ssim) A.ppm B.ppm    image-quality scores
  estimate --env env.ppm --mask mask.pgm   parametric lights from a map

Setup specs are '+'-joined camera terms: front70, back120, back120@yaw-30.
Exit codes: 0 success, 2 config/usage error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import envmap as em
from . import geometry, image_io, lighting, metrics
from .capture import ScenarioConfig
from .policy import BATTERY_TABLE, fit_energy_model, predict_battery_pct
from .simulate import run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


def parse_setup(spec: str):
    """'front70+back120@yaw-30' -> list of (label, intrinsics, camera pose)."""
    frusta = []
    for term in spec.split("+"):
        term = term.strip()
        body, _, mod = term.partition("@")
        if body.startswith("front"):
            role, fov = "front", body[len("front"):]
        elif body.startswith("back"):
            role, fov = "back", body[len("back"):]
        else:
            raise ValueError(f"setup term {term!r} must start with front/back")
        try:
            h_fov = float(fov)
        except ValueError:
            raise ValueError(f"setup term {term!r} has no FoV number") from None
        yaw = 0.0
        if mod:
            if not mod.startswith("yaw"):
                raise ValueError(f"unknown modifier in {term!r} (only yaw<deg>)")
            yaw = float(mod[len("yaw"):])
        intr = geometry.intrinsics_from_fov(h_fov, 640, 480)
        rot = geometry.rot_y(yaw)
        pose = geometry.DevicePose(rot)
        if role == "front":
            pose = geometry.camera_pose(pose, geometry.FRONT)
        frusta.append((term, intr, pose))
    return frusta


def cmd_coverage(args) -> int:
    rows = []
    for spec in args.setup:
        frusta = parse_setup(spec)
        report = metrics.coverage([(i, p) for _, i, p in frusta],
                                  n=args.samples, dilation_deg=args.dilation_deg,
                                  labels=[t for t, _, _ in frusta])
        rows.append((spec, report))
    base = rows[0][1].fraction
    table = [{"setup": spec, "coverage": r.fraction,
              "ratio_to_first": (r.fraction / base) if base > 0 else None,
              "per_camera": r.per_camera} for spec, r in rows]
    out = {"n_samples": args.samples, "dilation_deg": args.dilation_deg,
           "setups": table}
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_energy(args) -> int:
    if args.table:
        rows = []
        with open(args.table) as f:
            for line in f:
                line = line.split("#", 1)[0].strip()
                if not line or line.lower().startswith("front"):
                    continue
                parts = [float(x) for x in line.replace(",", " ").split()]
                if len(parts) != 3:
                    raise ValueError(f"expected 3 columns, got {line!r}")
                rows.append(tuple(parts))
    else:
        rows = BATTERY_TABLE
    model = fit_energy_model(rows)
    residuals = []
    for f_min, b_min, measured in rows:
        pred = predict_battery_pct(model, f_min, b_min)
        residuals.append({"front_min": f_min, "back_min": b_min,
                          "measured_pct": measured, "predicted_pct": pred,
                          "residual_pct": pred - measured})
    out = {"model": {"idle_pct_per_min": model.idle_pct_per_min,
                     "front_pct_per_min": model.front_pct_per_min,
                     "back_pct_per_min": model.back_pct_per_min,
                     "tail_pct_per_activation": model.tail_pct_per_activation},
           "rows": residuals,
           "max_abs_residual_pct": max(abs(r["residual_pct"]) for r in residuals)}
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_metrics(args) -> int:
    a = image_io.read_ppm(args.images[0])
    b = image_io.read_ppm(args.images[1])
    out = {}
    if args.psnr:
        val = metrics.psnr(a, b, max_val=1.0)
        out["psnr_db"] = "inf" if val == float("inf") else val
    if args.ssim:
        out["ssim"] = metrics.ssim(a, b)
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_estimate(args) -> int:
    texels = image_io.read_ppm(args.env).astype(np.float32)
    mask = image_io.read_pgm(args.mask)
    if mask.shape != texels.shape[:2]:
        raise ValueError("mask dimensions do not match the environment map")
    env = em.EnvironmentMap(texels=texels, observed=mask,
                            updated_at=np.where(mask, 1, 0).astype(np.int64),
                            written_by=np.where(mask, 2, 0).astype(np.uint8))
    est = lighting.estimate_lights(env)
    print(json.dumps(est.to_dict(), indent=2))
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = ScenarioConfig.from_json(args.config)
    if args.out:
        config.out_dir = args.out
    _, _, report, _ = run_scenario(config)
    print(json.dumps({"scenario_id": report.scenario_id,
                      "coverage_fraction": report.coverage.fraction,
                      "battery_pct": report.ledger.battery_pct,
                      "actions": report.action_counts,
                      "wall_clock_ms": report.wall_clock_ms}, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="envlight", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario config end to end")
    p.add_argument("--config", required=True, help="scenario JSON path")
    p.add_argument("--out", help="artifact output directory (overrides config)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("coverage", help="coverage table for camera setups")
    p.add_argument("--setup", action="append", required=True,
                   help="e.g. front70 or front70+back120 or back120@yaw-30")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--dilation-deg", type=float, default=0.0)
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("energy", help="fit the battery-rate model")
    p.add_argument("--table", help="CSV of front_min, back_min, battery_pct "
                                   "(defaults to the built-in measurements)")
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("metrics", help="PSNR/SSIM between two PPM images")
    p.add_argument("--psnr", action="store_true")
    p.add_argument("--ssim", action="store_true")
    p.add_argument("images", nargs=2, metavar=("A", "B"))
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("estimate", help="parametric lights from env + mask")
    p.add_argument("--env", required=True, help="environment map PPM")
    p.add_argument("--mask", required=True, help="observation mask PGM")
    p.set_defaults(func=cmd_estimate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses its own exit codes
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
