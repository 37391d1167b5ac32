"""SVG figures from an evaluation report: error bars, spatial grids, and
the bright/dark split. One file per report section that is present."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .errors import DataError


def plot_report(report: dict, out_dir) -> list[Path]:
    if report.get("schema") != "hifigaze-report-1":
        raise DataError(f"unsupported report schema {report.get('schema')!r}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    variants = report.get("variants", {})
    if not variants:
        raise DataError("report has no variants to plot")
    written = []

    names = list(variants)
    means = [variants[v]["pooled"]["mean_cm"] for v in names]
    sds = [variants[v]["pooled"]["sd_cm"] for v in names]
    z = report.get("z_scores")

    n_panels = 2 if z else 1
    fig, axes = plt.subplots(n_panels, 1, figsize=(1.4 * len(names) + 2, 3 * n_panels))
    axes = np.atleast_1d(axes)
    if z:
        axes[0].bar(names, [z[v] for v in names], color="#e08214")
        axes[0].axhline(0, color="k", lw=0.8)
        axes[0].set_ylabel("z-scored mean error")
        ax = axes[1]
    else:
        ax = axes[0]
    ax.bar(names, means, yerr=sds, capsize=4, color="#4575b4")
    ax.set_ylabel("mean error (cm)")
    ax.set_xlabel("variant")
    fig.tight_layout()
    path = out_dir / "error_bars.svg"
    fig.savefig(path)
    plt.close(fig)
    written.append(path)

    grids = {v: variants[v].get("spatial_grid_px") for v in names}
    grids = {v: g for v, g in grids.items() if g}
    if grids:
        fig, axes = plt.subplots(1, len(grids), figsize=(3 * len(grids), 4), squeeze=False)
        for ax, (v, grid) in zip(axes[0], grids.items()):
            arr = np.array([[np.nan if c is None else c for c in row] for row in grid])
            im = ax.imshow(arr, cmap="magma", aspect="auto")
            ax.set_title(v)
            ax.set_xlabel("gaze x bin")
            ax.set_ylabel("gaze y bin (top=0)")
            fig.colorbar(im, ax=ax, label="mean error (px)")
        fig.tight_layout()
        path = out_dir / "spatial_grid.svg"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)

    splits = {v: variants[v].get("bright_dark") for v in names}
    splits = {v: s for v, s in splits.items() if s}
    if splits:
        fig, ax = plt.subplots(figsize=(1.6 * len(splits) + 2, 3.2))
        xs = np.arange(len(splits))
        bright = [s["bright"]["mean_cm"] for s in splits.values()]
        dark = [s["dark"]["mean_cm"] for s in splits.values()]
        ax.bar(xs - 0.2, bright, width=0.4, label="bright", color="#fee090")
        ax.bar(xs + 0.2, dark, width=0.4, label="dark", color="#313695")
        ax.set_xticks(xs, list(splits))
        ax.set_ylabel("mean error (cm)")
        ax.legend()
        fig.tight_layout()
        path = out_dir / "bright_dark.svg"
        fig.savefig(path)
        plt.close(fig)
        written.append(path)

    return written
