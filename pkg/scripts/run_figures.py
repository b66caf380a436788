"""Run the three figure sweeps and write CSVs under results/.

    python3 scripts/run_figures.py [--threads N] [--only fig1 fig3]
"""

import argparse
import sys
from pathlib import Path

from repeater_mimo.cli import main as cli_main

ROOT = Path(__file__).resolve().parent.parent
FIGURES = ("fig1", "fig2", "fig3")


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--threads", default="1")
    ap.add_argument("--only", nargs="+", choices=FIGURES, default=list(FIGURES))
    ap.add_argument("--results", type=Path, default=ROOT / "results")
    args = ap.parse_args(argv)

    for name in args.only:
        cfg = ROOT / "configs" / f"{name}.ini"
        code = cli_main(["sweep", "--config", str(cfg), "--out", str(args.results / name), "--threads", args.threads])
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
