"""Plot sum SE against alpha from a sweep CSV, one line per (rho, flavor).

    python3 scripts/plot_sweep.py results/fig1/sum_se.csv -o fig1.png

Needs matplotlib, which is not a dependency of the package.
"""

import argparse
import csv
from collections import defaultdict


def load_curves(path):
    curves = defaultdict(list)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            key = (float(row["rho"]), row["flavor"])
            curves[key].append((float(row["alpha"]), float(row["mean_sum_se_bits_per_hz"])))
    return curves


def main(argv=None):
    ap = argparse.ArgumentParser(description="plot a sweep CSV")
    ap.add_argument("csv")
    ap.add_argument("-o", "--out", default="sum_se.png")
    args = ap.parse_args(argv)

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    curves = load_curves(args.csv)
    rhos = sorted({rho for rho, _ in curves}, reverse=True)
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for (rho, flavor), pts in sorted(curves.items(), key=lambda kv: (-kv[0][0], kv[0][1])):
        pts.sort()
        # alpha = 0 has no place on a log axis; show it as a dotted baseline
        base = [s for a, s in pts if a == 0.0]
        xs, ys = zip(*[(a, s) for a, s in pts if a > 0])
        color = f"C{rhos.index(rho)}"
        style = "-" if flavor == "DA" else "--"
        ax.semilogx(xs, ys, style, color=color, label=f"{flavor}, rho={rho:g} 1/W")
        if base and rho == rhos[0] and flavor == "DA":
            ax.axhline(base[0], color="black", linestyle=":", label="no repeater (alpha=0)")
    ax.set_xlabel("repeater amplification alpha")
    ax.set_ylabel("sum SE [bit/s/Hz]")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
