#!/usr/bin/env python3
"""Plot a run's trace: trajectories, positions, controls, and spectrum history.

Dev utility (matplotlib): reads trace.csv / eigenvalues.csv from a run output
directory and writes trace.png next to them.

    python scripts/plot_trace.py out/connectivity
"""

import csv
import sys
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def load_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    head = rows[0]
    body = rows[1:]
    return head, body


def main() -> int:
    if len(sys.argv) != 2:
        print(__doc__)
        return 1
    out = Path(sys.argv[1])
    head, body = load_csv(out / "trace.csv")
    col = {name: i for i, name in enumerate(head)}
    t = np.array([float(r[col["t"]]) for r in body])
    p = sum(1 for name in head if name.startswith("x") and name.endswith("_x"))
    m = sum(1 for name in head if name.startswith("u_"))
    pos = np.array([[[float(r[col[f"x{i+1}_x"]]), float(r[col[f"x{i+1}_y"]])]
                     for i in range(p)] for r in body])
    u = np.array([[float(r[col[f"u_{c+1}"]]) for c in range(m)] for r in body])
    ehead, ebody = load_csv(out / "eigenvalues.csv")
    eig = np.array([[float(v) for v in r[1:]] for r in ebody])

    fig, axes = plt.subplots(2, 2, figsize=(12, 8))
    ax = axes[0, 0]
    for i in range(p):
        ax.plot(pos[:, i, 0], pos[:, i, 1], label=f"agent {i+1}")
        ax.plot(pos[0, i, 0], pos[0, i, 1], "o", ms=4, color=ax.lines[-1].get_color())
    ax.set_title("trajectories")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.axis("equal")
    ax.legend(fontsize=7)

    ax = axes[0, 1]
    for i in range(p):
        ax.plot(t, pos[:, i, 0], lw=0.8)
        ax.plot(t, pos[:, i, 1], lw=0.8, ls="--")
    ax.set_title("positions (solid x, dashed y)")
    ax.set_xlabel("t [s]")

    ax = axes[1, 0]
    for c in range(m):
        ax.plot(t, u[:, c], lw=0.6)
    ax.set_title("filtered controls")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("u [m/s]")

    ax = axes[1, 1]
    for j in range(eig.shape[1]):
        ax.plot(t[:len(eig)], eig[:, j], lw=0.9, label=f"$\\lambda_{{{j+1}}}$")
    ax.set_title("spectrum")
    ax.set_xlabel("t [s]")
    ax.legend(fontsize=7)

    fig.tight_layout()
    target = out / "trace.png"
    fig.savefig(target, dpi=130)
    print(f"wrote {target}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
