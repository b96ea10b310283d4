"""Critical points of the coupled pair potential and its three regimes.

The phase-zero potential of two bidirectionally coupled nodes deforms as
the coupling grows: nine critical points (weak coupling) lose an
asymmetric sink-saddle quartet at the saddle-node value, then the two
remaining gate saddles collapse onto the diagonal in a pitchfork.  The
script detects both events, prints the census at a representative coupling
per regime, and draws the potential contours with the critical points.
"""

import pathlib

import numpy as np

from seqescape import (
    NodeParams,
    detect_bifurcations,
    find_critical_points_2node,
    potential_2node,
)

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

P = NodeParams(nu=0.2, omega=0.0, alpha=0.05)
MARKERS = {"sink": ("o", "tab:green"), "saddle": ("^", "tab:red"), "source": ("s", "tab:blue")}


def main():
    scan = detect_bifurcations(P, (1e-3, 0.5))
    print(f"saddle-node at beta = {scan.beta_SN:.7f}")
    print(f"pitchfork   at beta = {scan.beta_PF:.6f}\n")

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    betas = (0.01, 0.1, 1.0)
    fig, axes = plt.subplots(1, 3, figsize=(13, 4.2), sharey=True)
    grid = np.linspace(0.02, 1.6, 220)
    R1, R2 = np.meshgrid(grid, grid)
    for ax, beta in zip(axes, betas):
        points = find_critical_points_2node(P, beta)
        census = {}
        for c in points:
            census[c.kind] = census.get(c.kind, 0) + 1
        print(f"beta={beta:<5}: regime={scan.regime(beta):>12}, "
              f"{len(points)} critical points {census}")
        V = potential_2node(R1, R2, 0.0, P, beta)
        ax.contour(R1, R2, V, levels=40, linewidths=0.4, colors="gray")
        for c in points:
            marker, color = MARKERS[c.kind]
            ax.plot(*c.position, marker, color=color, ms=7, mec="k")
        ax.set_title(f"beta={beta} ({scan.regime(beta)})")
        ax.set_xlabel("R1")
    axes[0].set_ylabel("R2")
    fig.tight_layout()
    fig.savefig(OUT / "bifurcation_regimes.png", dpi=130)
    print(f"\nFigure written to {OUT}/bifurcation_regimes.png")


if __name__ == "__main__":
    main()
