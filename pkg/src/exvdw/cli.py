"""Batch front-end: JSON scenario in, CSV (and optional SVG) out.

All configuration is parsed and checked before the output directory is
touched, and every grid point is computed before anything is written, so a
failed run leaves no partial files behind.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .atomic import evolve_populations
from .casimir_polder import pairwise_cp_channels, single_atom_cp_resonant
from .config import (ConfigError, ScanConfig, load_json, parse_cp, parse_kernel_check,
                     parse_scan)
from .force import _check_body, total_force
from .green import DiluteBody
from .kernels import IDENTITY_TOLERANCES, identity_report
from .quadrature import QuadratureError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

FREE_SPACE_HEADER = ("r_m,t_s,F_A_res_N,F_A_nonres_N,F_A_total_N,"
                     "F_B_res_N,F_B_total_N,quad_err_est")
_QUANTITIES = ("F_A_res", "F_A_nonres", "F_A_total", "F_B_res", "F_B_total")


def _fmt(x) -> str:
    return repr(float(x))


def scan_header(vector: bool) -> str:
    if not vector:
        return FREE_SPACE_HEADER
    cols = [f"{q}_{c}_N" for q in _QUANTITIES for c in "xyz"]
    return ",".join(["r_m", "t_s", *cols, "quad_err_est"])


def _placed(cfg: ScanConfig, r: float):
    A = cfg.A.species
    B = cfg.B.species.moved(A.position + r * cfg.axis)
    return A, B


def scan_point(cfg: ScanConfig, r: float, t: float) -> list[float]:
    """One CSV row (as floats) for separation ``r`` at time ``t``."""
    A, B = _placed(cfg, r)
    fb = total_force(A, B, cfg.A.initial, cfg.B.initial, cfg.environment, t, cfg.quad)
    vals = [fb.on_A_resonant, fb.on_A_nonresonant, fb.on_A,
            fb.on_B_resonant, fb.on_B]
    if isinstance(cfg.environment, DiluteBody):
        comps = [c for v in vals for c in v]
    else:
        # positive = repulsive: A pushed along -axis, B along +axis
        comps = [float(v @ s) for v, s in zip(vals, (-cfg.axis,) * 3 + (cfg.axis,) * 2)]
    return [r, t, *comps, fb.quad_error]


def _scan_task(args):
    cfg, r, t = args
    return scan_point(cfg, r, t)


def run_scan(cfg: ScanConfig, workers: int = 1) -> tuple[str, list[list[float]]]:
    """Evaluate the whole grid; rows come back in grid order regardless of workers."""
    points = [(r, t) for r in cfg.distances for t in cfg.times]
    for r, _ in points:
        _check_body(cfg.environment, *_placed(cfg, r))
    tasks = [(cfg, float(r), float(t)) for r, t in points]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_scan_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        rows = [_scan_task(task) for task in tasks]
    return scan_header(isinstance(cfg.environment, DiluteBody)), rows


def write_csv(path: Path, header: str, rows) -> None:
    lines = [header] + [",".join(_fmt(v) if not isinstance(v, str) else v for v in row)
                        for row in rows]
    path.write_text("\n".join(lines) + "\n")


def cp_report(atom, body, t: float) -> list[list]:
    """Per-component comparison of the single-atom and pairwise routes."""
    pops = evolve_populations(atom.species, atom.initial, t)
    single = single_atom_cp_resonant(atom.species, pops, body, t)
    channels = pairwise_cp_channels(atom.species, pops, body, t)
    pair = channels["oscillating"]
    scale = float(np.linalg.norm(single))
    rows = []
    for name, s, p in [*zip("xyz", single, pair),
                       ("norm", scale, float(np.linalg.norm(pair)))]:
        diff = abs(s - p) if name != "norm" else float(np.linalg.norm(single - pair))
        rows.append([name, s, p, diff, diff / scale if scale > 0 else 0.0])
    mono = float(np.linalg.norm(channels["monotonic"]))
    rows.append(["monotonic_norm", 0.0, mono, mono, mono / scale if scale > 0 else 0.0])
    return rows


def kernel_rows(count: int, seed: int, tolerance: float | None) -> list[list]:
    report = identity_report(count, seed)
    rows = []
    for name, dev in report.items():
        tol = IDENTITY_TOLERANCES[name] if tolerance is None else tolerance
        rows.append([name, str(count), dev, tol, "true" if dev <= tol else "false"])
    return rows


def _load(path):
    return load_json(path) if path is not None else None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="exvdw",
        description="Time-dependent van der Waals forces between excited atoms.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="scenario JSON file")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--workers", type=int, default=1, help="worker processes")
        p.add_argument("--seed", type=int, default=0, help="random seed (u64)")
        p.add_argument("--plot", action="store_true", help="also write an SVG per scan")

    common(sub.add_parser("force-vs-distance", help="two-atom force over a distance grid"))
    common(sub.add_parser("force-vs-time", help="two-atom force over a time grid"))
    cp = sub.add_parser("cp-consistency", help="single-atom vs pairwise Casimir-Polder force")
    common(cp)
    cp.add_argument("--tolerance", type=float, default=1e-8,
                    help="allowed relative difference (default: 1e-8)")
    kc = sub.add_parser("kernel-check", help="randomised kernel identity suite")
    common(kc, config_required=False)
    kc.add_argument("--count", type=int, default=None, help="random samples (default 1000)")
    kc.add_argument("--tolerance", type=float, default=None,
                    help="override every identity tolerance")
    return parser


def _validate_common(args):
    if args.workers < 1:
        raise ConfigError("--workers must be at least 1")
    if not 0 <= args.seed < 2**64:
        raise ConfigError("--seed must be an unsigned 64-bit integer")
    out = Path(args.out)
    if out.exists() and not out.is_dir():
        raise ConfigError(f"--out {out} is not a directory")
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out = _validate_common(args)
        raw = _load(args.config)
        if args.command in ("force-vs-distance", "force-vs-time"):
            mode = "distance" if args.command == "force-vs-distance" else "time"
            cfg = parse_scan(raw, mode)
        elif args.command == "cp-consistency":
            cfg = parse_cp(raw)
            if args.tolerance <= 0:
                raise ConfigError("--tolerance must be positive")
        else:
            cfg = parse_kernel_check(raw)
            if args.count is not None:
                if args.count < 1:
                    raise ConfigError("--count must be positive")
                cfg = type(cfg)(args.count, cfg.tolerance)
            if args.tolerance is not None and args.tolerance <= 0:
                raise ConfigError("--tolerance must be positive")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command in ("force-vs-distance", "force-vs-time"):
            header, rows = run_scan(cfg, args.workers)
            name = args.command.replace("-", "_")
            status = EXIT_OK
            summary = (f"max quadrature error estimate {max(r[-1] for r in rows):.3e} N "
                       f"over {len(rows)} points")
        elif args.command == "cp-consistency":
            header = "component,single_atom_N,pairwise_N,abs_diff_N,rel_diff"
            rows = cp_report(cfg.atom, cfg.body, cfg.time)
            name = "cp_consistency"
            worst = max(r[4] for r in rows)
            status = EXIT_OK if worst <= args.tolerance else EXIT_FAIL
            summary = (f"max relative difference {worst:.3e} (tolerance {args.tolerance:g}); "
                       f"quadrature-free")
        else:
            header = "check,samples,max_rel_deviation,tolerance,pass"
            tol = args.tolerance if args.tolerance is not None else cfg.tolerance
            rows = kernel_rows(cfg.count, args.seed, tol)
            name = "kernel_check"
            failed = [r[0] for r in rows if r[4] != "true"]
            status = EXIT_FAIL if failed else EXIT_OK
            summary = (f"{len(rows) - len(failed)}/{len(rows)} identities pass; "
                       f"quadrature-free")
    except (ValueError, QuadratureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL

    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{name}.csv"
    write_csv(csv_path, header, rows)
    written = [csv_path]
    if args.plot and args.command in ("force-vs-distance", "force-vs-time"):
        from .plotting import plot_scan

        written.append(plot_scan(csv_path, out / f"{name}.svg",
                                 "r_m" if args.command == "force-vs-distance" else "t_s"))
    print(f"wrote {', '.join(str(p) for p in written)}; {summary}")
    return status


if __name__ == "__main__":
    sys.exit(main())
