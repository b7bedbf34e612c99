"""Command-line front end: ``sparse2d <command> [options]``.

Exit status is 0 on success, 1 for bad input, 2 when the mask is certified
infeasible.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import io as sio
from .beampattern import bp_cut, grating_lobes
from .geometry import DenseGridSpec, build_dense_layout
from .metrics import RoiSpec, bp_image, cr, fwhm, gcnr, msll
from .reference import SpiralSpec, spiral_layout
from .synthesis import INFEASIBLE, run_synthesis, verify_solution

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE = 0, 1, 2


def _load(args) -> sio.RunConfig:
    if args.config is None:
        return sio.parse_config("")
    return sio.load_config(args.config)


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_synthesize(args) -> int:
    if args.config is None:
        raise sio.ConfigError("synthesize needs --config")
    rc = _load(args)
    cfg = rc.synthesis_config()
    out = _out(args)
    t0 = time.perf_counter()

    def log(rec):
        if not args.quiet:
            print(f"iter {rec.k:3d}  count {rec.count:5d}  objective {rec.objective:.6g}  "
                  f"{rec.status}  {rec.seconds:.1f}s", flush=True)

    res = run_synthesis(cfg, log=log)
    wall = time.perf_counter() - t0
    trace_path = sio.write_csv(out / "trace.csv", res.trace.csv_rows())
    outputs = []
    extra = {"n_mask_samples": len(res.mask_samples)}
    if res.layout is not None:
        outputs.append(sio.write_layout(out / "layout.csv", res.layout))
        outputs.append(sio.write_weights(out / "weights.csv", res.weights.weights))
        extra["n_active"] = len(res.layout)
    else:
        o = res.outcome
        extra["solver_status"] = str(o.status)
        if o.certificate_res is not None:
            extra["certificate_residual"] = o.certificate_res
    sio.write_manifest(out / "manifest.json", command="synthesize", config=rc.snapshot(),
                       inputs=[args.config], outputs=outputs, timed=[trace_path],
                       wall_time=wall, termination=res.termination, extra=extra)
    if res.termination == INFEASIBLE:
        o = res.outcome
        print(f"infeasible: solver status {o.status}, Farkas certificate residual "
              f"{o.certificate_res:.3e} over {len(res.mask_samples)} mask samples")
        return EXIT_INFEASIBLE
    if res.layout is None:
        print(f"synthesis stopped: {res.termination} ({res.outcome.status})", file=sys.stderr)
        return EXIT_INPUT
    print(f"{res.termination}: {len(res.layout)} of {cfg.grid.n_elements} elements active")
    return EXIT_OK


def cmd_bp(args) -> int:
    rc = _load(args)
    layout = sio.read_layout(args.layout, rc.grid)
    out = _out(args)
    img = bp_image(layout, args.extent, args.step)
    sio.write_raster(out / "bp.f32", img)
    for axis, name in (("v=0", "cut_v0.csv"), ("u=0", "cut_u0.csv")):
        coord, db = bp_cut(layout, axis, args.step, args.extent)
        sio.write_csv(out / name, [("coord", "mag_db")] + list(zip(coord, db)))
    if args.csv:
        X, Y = img.coords()
        rows = zip(X.ravel(), Y.ravel(), img.values.ravel())
        sio.write_csv(out / "bp.csv", [("u", "v", "mag_db")] + list(rows))
    print(f"beam pattern {img.width}x{img.height} written to {out}")
    return EXIT_OK


def cmd_gratings(args) -> int:
    rc = _load(args)
    grid = rc.grid
    g = grating_lobes(grid)
    if args.half_plane:
        g = g.half_plane()
    rows = [("u", "v", "n", "m")] + [
        (u, v, int(o[0]), int(o[1])) for u, v, o in zip(g.u, g.v, g.orders)
    ]
    if args.out is not None:
        sio.write_csv(_out(args) / "gratings.csv", rows)
    print(f"lambda/dx = {grid.wavelength / grid.pitch_x:.4f}, "
          f"lambda/dy = {grid.wavelength / grid.pitch_y:.4f}")
    for u, v, n, m in rows[1:]:
        print(f"  order ({n:+d},{m:+d})  u = {u:+.4f}  v = {v:+.4f}")
    return EXIT_OK


def cmd_reference(args) -> int:
    rc = _load(args)
    grid = rc.grid
    if args.kind == "dense":
        layout = build_dense_layout(grid)
    else:
        s = rc.spiral
        frac = s.taper_fraction if args.kind == "spiral-taper" else 0.0
        if args.kind == "spiral-taper" and frac == 0:
            raise ValueError("spiral-taper needs spiral.taper_fraction > 0")
        layout = spiral_layout(SpiralSpec(s.n_seeds, s.aperture_radius,
                                          taper_fraction=frac), grid)
    path = sio.write_layout(_out(args) / f"{args.kind}.csv", layout)
    print(f"{args.kind}: {len(layout)} elements written to {path}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    sl = sio.read_raster(args.raster, args.sidecar)
    rows = [("metric", "plane", "roi", "value")]
    i, j = np.unravel_index(np.argmax(sl.values), sl.values.shape)
    X, Y = sl.coords()
    try:
        rows.append(("fwhm_x", sl.plane, "peak-row", fwhm(X[i], sl.values[i], "db")))
        rows.append(("fwhm_y", sl.plane, "peak-col", fwhm(Y[:, j], sl.values[:, j], "db")))
    except ValueError as exc:
        print(f"fwhm skipped: {exc}", file=sys.stderr)
    try:
        rows.append(("msll", sl.plane, "all", msll(sl, mode=args.msll_mode)))
    except ValueError as exc:
        print(f"msll skipped: {exc}", file=sys.stderr)
    if args.roi is not None:
        cx, cy, r, bi, bo = args.roi
        roi = RoiSpec((cx, cy), r, bi, bo)
        rows.append(("cr", sl.plane, "cyst/back", cr(sl, roi)))
        rows.append(("gcnr", sl.plane, "cyst/back", gcnr(sl, roi, args.bins)))
    path = sio.write_csv(_out(args) / "metrics.csv", rows)
    for row in rows[1:]:
        print(f"  {row[0]:7s} {row[3]:.6g}")
    print(f"written to {path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    rc = _load(args)
    layout = sio.read_layout(args.layout, rc.grid)
    mask = rc.mask
    step = args.step if args.step is not None else rc.sections["synth"]["du"] / 4
    rep = verify_solution(layout, mask, step, rc.sections["synth"]["half_plane"])
    rows = [("quantity", "value"), ("n_elements", len(layout)), ("step", step),
            ("n_samples", rep.n_samples), ("peak_sll_db", rep.peak_sll_db),
            ("mask_db", mask.sll_db), ("worst_violation_db", rep.worst_violation_db),
            ("worst_u", rep.worst_u), ("worst_v", rep.worst_v)]
    if args.out is not None:
        sio.write_csv(_out(args) / "verify.csv", rows)
    for k, v in rows[1:]:
        print(f"  {k:20s} {v}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--threads", type=int, default=None,
                        help="BLAS thread count (speed only)")

    p = argparse.ArgumentParser(prog="sparse2d", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synthesize", parents=[common], help="reweighted-L1 sparse synthesis")
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(func=cmd_synthesize)

    s = sub.add_parser("bp", parents=[common], help="beam-pattern raster and cuts")
    s.add_argument("--layout", required=True)
    s.add_argument("--step", type=float, default=0.005)
    s.add_argument("--extent", type=float, default=2.0)
    s.add_argument("--csv", action="store_true", help="also write long-format bp.csv")
    s.set_defaults(func=cmd_bp)

    s = sub.add_parser("gratings", parents=[common], help="grating-lobe positions")
    s.add_argument("--half-plane", action="store_true")
    s.set_defaults(func=cmd_gratings, out=None)

    s = sub.add_parser("reference", parents=[common], help="dense or spiral layouts")
    s.add_argument("--kind", choices=("dense", "spiral", "spiral-taper"), required=True)
    s.set_defaults(func=cmd_reference)

    s = sub.add_parser("metrics", parents=[common], help="image metrics of a raster")
    s.add_argument("--raster", required=True)
    s.add_argument("--sidecar")
    s.add_argument("--roi", type=float, nargs=5, metavar=("CX", "CY", "R", "BIN", "BOUT"))
    s.add_argument("--bins", type=int, default=256)
    s.add_argument("--msll-mode", choices=("db", "linear"), default="db")
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("verify", parents=[common], help="re-check a layout on a fine grid")
    s.add_argument("--layout", required=True)
    s.add_argument("--step", type=float)
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    # ``gratings`` and ``verify`` only write files when --out is explicit
    if args.command in ("gratings", "verify") and "--out" not in (argv or sys.argv):
        args.out = None
    try:
        if args.threads is not None:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=args.threads):
                return args.func(args)
        return args.func(args)
    except (sio.ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
