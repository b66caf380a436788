"""Command-line front end: ``sweep``, ``validate`` and ``single``.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime or
numerical failure (including failed validation checks).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import platform
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np
import scipy

from .bussgang import bussgang_model, min_eig_threshold
from .channel import SeedPolicy, draw_realization
from .config import ConfigError, RunConfig, load_config
from .runner import evaluate_cell_per_ue, run_sweep
from .validation import report_dict, run_validation

log = logging.getLogger("repeater_mimo")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

CSV_COLUMNS = ("alpha", "rho", "flavor", "mean_sum_se_bits_per_hz", "std_sum_se", "num_realizations")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(x: float) -> str:
    """12 significant digits, locale independent."""
    s = f"{x:.12g}"
    return "0" if s == "-0" else s


def build_info() -> dict:
    from importlib.metadata import PackageNotFoundError, version

    try:
        pkg = version("artifact")
    except PackageNotFoundError:
        pkg = "unknown"
    return {
        "package_version": pkg,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": platform.platform(),
    }


def write_csv(path: Path, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for a, r, fl, mean, std, n in rows:
            w.writerow([fmt(a), fmt(r), fl, fmt(mean), fmt(std), str(n)])


def _resolve_threads(n: int) -> int:
    return (os.cpu_count() or 1) if n == 0 else n


def cmd_sweep(cfg: RunConfig, out_dir: Path, threads: int) -> int:
    spec = cfg.sweep_spec()
    n_cells = int(np.prod(spec.shape))
    log.info("sweep %s: %d realizations x %d cells, %d thread(s)", cfg.name, spec.num_realizations, n_cells, threads)
    step = max(1, spec.num_realizations // 10)

    def progress(done, total):
        if done % step == 0 or done == total:
            log.info("realizations completed: %d/%d", done, total)

    t0 = time.perf_counter()
    result = run_sweep(spec, workers=threads, progress=progress)
    wall = time.perf_counter() - t0

    out_dir.mkdir(parents=True, exist_ok=True)
    rows = result.rows()
    csv_path = out_dir / cfg.csv_name
    write_csv(csv_path, rows)
    meta = {
        "config": cfg.to_mapping(),
        "seed": cfg.seed,
        "build": build_info(),
        "wall_time_s": wall,
        "threads": threads,
        "num_rows": len(rows),
        "csv": cfg.csv_name,
        "csv_columns": list(CSV_COLUMNS),
    }
    with open(out_dir / cfg.metadata_name, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
    log.info("wrote %s (%d rows) in %.1f s", csv_path, len(rows), wall)
    return EXIT_OK


def cmd_validate(cfg: RunConfig, samples: int | None, json_path: Path | None) -> int:
    v = cfg.validate
    params = cfg.system_params()
    if v.num_bs_antennas is not None:
        params = replace(params, num_bs_antennas=v.num_bs_antennas)
    channels = draw_realization(cfg.scenario, params, v.realization_index, SeedPolicy(cfg.seed))
    n_b = samples or v.samples_bussgang
    n_cov = samples or v.samples_covariance
    log.info("validate %s: M=%d K=%d, N_B=%d, N_C=%d", cfg.name, params.num_bs_antennas, params.num_ues, n_b, n_cov)
    checks = run_validation(channels, params, v.operating_points, n_b=n_b, n_cov=n_cov, seed=cfg.seed)
    for c in checks:
        print(c.line())
    report = report_dict(checks)
    n_fail = sum(not c.passed for c in checks)
    print(f"{len(checks) - n_fail}/{len(checks)} checks passed across {len(report['families'])} families")
    if json_path is not None:
        json_path.parent.mkdir(parents=True, exist_ok=True)
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
    return EXIT_OK if report["passed"] else EXIT_RUNTIME


def single_dump(cfg: RunConfig, index: int) -> dict:
    params = cfg.system_params()
    channels = draw_realization(cfg.scenario, params, index, SeedPolicy(cfg.seed))
    points = []
    for a in cfg.alpha_values:
        for r in cfg.rho_per_watt:
            p = params.at(alpha=a, rho=r)
            model = bussgang_model(channels, p)
            lam = np.linalg.eigvalsh(model.C_eta)
            entry = {
                "alpha": a,
                "rho": r,
                "repeater_input_power_w": model.repeater_input_power,
                "B": (np.stack([model.B.real, model.B.imag], axis=-1)).tolist(),
                "C_eta_eigenvalues": {
                    "min": float(lam[0]),
                    "max": float(lam[-1]),
                    "trace": float(np.real(np.trace(model.C_eta))),
                    "psd_threshold": min_eig_threshold(model.C_eta),
                },
            }
            for fl in cfg.flavors:
                entry[f"se_{fl.value}"] = evaluate_cell_per_ue(channels, p, fl).tolist()
            points.append(entry)
    return {
        "config_name": cfg.name,
        "seed": cfg.seed,
        "realization_index": index,
        "channels": channels.to_json_dict(),
        "grid": points,
    }


def cmd_single(cfg: RunConfig, index: int, out_path: Path) -> int:
    dump = single_dump(cfg, index)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(dump, fh, indent=1)
    log.info("wrote %s", out_path)
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS, help="only log warnings and errors")
    parser = _Parser(prog="repeater-mimo", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sw = sub.add_parser("sweep", parents=[common], help="average sum SE over an (alpha, rho) grid")
    sw.add_argument("--config", required=True, type=Path)
    sw.add_argument("--out", type=Path, help="output directory (overrides [output] dir)")
    sw.add_argument("--threads", type=int, default=1, help="worker threads, 0 = auto")
    sw.add_argument("--seed", type=int, help="override [run] seed")

    va = sub.add_parser("validate", parents=[common], help="check closed forms against Monte-Carlo estimates")
    va.add_argument("--config", required=True, type=Path)
    va.add_argument("--samples", type=int, help="override every Monte-Carlo sample count")
    va.add_argument("--json", type=Path, help="also write the report as JSON")

    si = sub.add_parser("single", parents=[common], help="dump one realization and its per-UE SE")
    si.add_argument("--config", required=True, type=Path)
    si.add_argument("--index", required=True, type=int)
    si.add_argument("--out", type=Path, help="dump path (default <output dir>/single_<index>.json)")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if getattr(args, "quiet", False) else logging.INFO,
        format="%(asctime)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = load_config(args.config)
        if getattr(args, "seed", None) is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed: must be a 64-bit unsigned integer")
            cfg = replace(cfg, seed=args.seed)
        if args.command == "sweep":
            if args.threads < 0:
                raise ConfigError("--threads: must be >= 0")
            return cmd_sweep(cfg, args.out or Path(cfg.output_dir), _resolve_threads(args.threads))
        if args.command == "validate":
            if args.samples is not None and args.samples < 1:
                raise ConfigError("--samples: must be >= 1")
            return cmd_validate(cfg, args.samples, args.json)
        if args.index < 0:
            raise ConfigError("--index: must be >= 0")
        out = args.out or Path(cfg.output_dir) / f"single_{args.index}.json"
        return cmd_single(cfg, args.index, out)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_USAGE
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_RUNTIME
    except (ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        log.error("runtime failure: %s", exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
