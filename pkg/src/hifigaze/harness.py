"""Evaluation harness: leave-one-participant-out cross-validation, error
metrics in px/cm, spatial and bright/dark analysis cuts, within-participant
z-scores across variants, per-stage benchmarks, and the report schema.
"""

from __future__ import annotations

import json
import os
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import LengthMismatch, MissingClass, TooFewParticipants
from .features import FeatureTable
from .iris import InitialIrisEstimate, locate_iris
from .matching import N_SCALES, make_thumbnail, multiscale_match
from .model import FeatureArrays, GazeRegressor, parse_variant
from .simulator import load_manifest
from .validation import check_gaze_array

# Report pixel/centimeter conversion (target speed 100 px/s = 1.65 cm/s).
PX_PER_CM = 60.606

REPORT_SCHEMA = "hifigaze-report-1"
BENCH_SCHEMA = "hifigaze-bench-1"

SPATIAL_ROWS = 9  # gaze-y bins, matching the 9 horizontal path levels
SPATIAL_COLS = 5  # gaze-x bins, matching the 5 vertical path levels


def max_workers() -> int:
    """Parallelism cap from HIFIGAZE_THREADS (default: available cores)."""
    env = os.environ.get("HIFIGAZE_THREADS")
    if env:
        try:
            return max(int(env), 1)
        except ValueError:
            pass
    return os.cpu_count() or 1


def error_metrics(preds, truths) -> dict:
    """Euclidean per-sample errors summarized in px and cm."""
    preds = check_gaze_array(preds, "preds")
    truths = check_gaze_array(truths, "truths")
    if len(preds) != len(truths):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(truths)} truths")
    if len(preds) == 0:
        raise LengthMismatch("need at least one sample")
    err = np.hypot(preds[:, 0] - truths[:, 0], preds[:, 1] - truths[:, 1])
    mean_px = float(err.mean())
    median_px = float(np.median(err))
    sd_px = float(err.std(ddof=1)) if len(err) > 1 else 0.0
    return {
        "n": int(len(err)),
        "mean_px": mean_px,
        "mean_cm": mean_px / PX_PER_CM,
        "median_px": median_px,
        "median_cm": median_px / PX_PER_CM,
        "sd_px": sd_px,
        "sd_cm": sd_px / PX_PER_CM,
    }


def spatial_heatmap(gaze_px, errors, n_rows: int = SPATIAL_ROWS, n_cols: int = SPATIAL_COLS):
    """Mean error binned on a rows-by-cols grid over the gaze extent.

    Rows bin gaze y (row 0 = screen top), columns bin gaze x. Empty bins
    are None.
    """
    gaze_px = check_gaze_array(gaze_px, "gaze_px")
    errors = np.asarray(errors, dtype=np.float64)
    if len(gaze_px) != len(errors):
        raise LengthMismatch("gaze and error arrays differ in length")
    if len(gaze_px) == 0:
        raise LengthMismatch("need at least one sample")

    def bin_of(v, lo, hi, n):
        if hi <= lo:
            return np.zeros(len(v), dtype=np.intp)
        idx = np.floor((v - lo) / (hi - lo) * n).astype(np.intp)
        return np.clip(idx, 0, n - 1)

    cols = bin_of(gaze_px[:, 0], gaze_px[:, 0].min(), gaze_px[:, 0].max(), n_cols)
    rows = bin_of(gaze_px[:, 1], gaze_px[:, 1].min(), gaze_px[:, 1].max(), n_rows)
    grid = [[None] * n_cols for _ in range(n_rows)]
    for r in range(n_rows):
        for c in range(n_cols):
            sel = (rows == r) & (cols == c)
            if sel.any():
                grid[r][c] = float(errors[sel].mean())
    return grid


def brightness_split(errors, brightness) -> dict:
    """Error metrics per brightness class; both classes must be present."""
    errors = np.asarray(errors, dtype=np.float64)
    brightness = np.asarray(brightness, dtype=object)
    out = {}
    for cls in ("bright", "dark"):
        sel = brightness == cls
        if not sel.any():
            raise MissingClass(f"no {cls} rows in the evaluation set")
        e = errors[sel]
        mean_px = float(e.mean())
        out[cls] = {
            "n": int(sel.sum()),
            "mean_px": mean_px,
            "mean_cm": mean_px / PX_PER_CM,
            "median_px": float(np.median(e)),
        }
    return out


def _eval_subset(table: FeatureTable, variant_name: str) -> np.ndarray:
    """Rows a variant trains and evaluates on. Vector-only models skip
    frames where either eye's vector is masked (there is nothing to feed
    them); every other variant uses all rows."""
    spec = parse_variant(variant_name)
    if spec.vector_only:
        return ~table.X.vector_masks.any(axis=1)
    return np.ones(len(table), dtype=bool)


def loocv_eval(table: FeatureTable, variant: str, **train_kwargs) -> dict:
    """Leave-one-participant-out evaluation of one variant.

    Trains one model per participant on everyone else, tests on the held-out
    participant, and aggregates per-participant metrics, the spatial grid,
    the bright/dark split, and a constant-centroid floor baseline.
    """
    parse_variant(variant)
    pids = np.unique(table.participants)
    if len(pids) < 2:
        raise TooFewParticipants(f"LOOCV needs >= 2 participants, got {len(pids)}")

    usable = _eval_subset(table, variant)
    total_rows = len(table)
    evaluated_rows = int(usable.sum())

    preds = np.full((total_rows, 2), np.nan)
    baseline_preds = np.full((total_rows, 2), np.nan)

    def run_fold(pid):
        test_sel = (table.participants == pid) & usable
        train_sel = (table.participants != pid) & usable
        if not test_sel.any() or not train_sel.any():
            return None
        train_idx = np.nonzero(train_sel)[0]
        test_idx = np.nonzero(test_sel)[0]
        reg = GazeRegressor(variant=variant, screen_dims=table.screen_dims, **train_kwargs)
        reg.fit(table.X.take(train_idx), table.y[train_idx])
        preds[test_idx] = reg.predict(table.X.take(test_idx))
        baseline_preds[test_idx] = table.y[train_idx].mean(axis=0)
        return {
            "participant": int(pid),
            "train_participants": sorted(int(q) for q in pids if q != pid),
            "n_train": int(len(train_idx)),
            "n_test": int(len(test_idx)),
            "final_train_loss_px": reg.history_[-1],
        }

    # Folds are independent; HIFIGAZE_THREADS>1 runs them concurrently
    # (results land in disjoint row ranges, so order cannot matter).
    workers = min(max_workers(), len(pids))
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            fold_results = list(pool.map(run_fold, pids))
    else:
        fold_results = [run_fold(pid) for pid in pids]
    folds = [f for f in fold_results if f is not None]

    eval_sel = ~np.isnan(preds[:, 0])
    errors = np.hypot(
        preds[eval_sel, 0] - table.y[eval_sel, 0], preds[eval_sel, 1] - table.y[eval_sel, 1]
    )
    eval_pids = table.participants[eval_sel]
    per_participant = {}
    for pid in pids:
        sel = eval_pids == pid
        if sel.any():
            per_participant[str(int(pid))] = error_metrics(
                preds[eval_sel][sel], table.y[eval_sel][sel]
            )

    means = np.array([m["mean_px"] for m in per_participant.values()])
    pooled_mean = float(means.mean())
    pooled_sd = float(means.std(ddof=1)) if len(means) > 1 else 0.0
    pooled = {
        "mean_px": pooled_mean,
        "mean_cm": pooled_mean / PX_PER_CM,
        "sd_px": pooled_sd,
        "sd_cm": pooled_sd / PX_PER_CM,
        "median_px": float(np.median(errors)),
        "median_cm": float(np.median(errors)) / PX_PER_CM,
    }

    base_err = np.hypot(
        baseline_preds[eval_sel, 0] - table.y[eval_sel, 0],
        baseline_preds[eval_sel, 1] - table.y[eval_sel, 1],
    )

    try:
        split = brightness_split(errors, table.brightness[eval_sel])
    except MissingClass:
        split = None

    return {
        "variant": variant,
        "per_participant": per_participant,
        "pooled": pooled,
        "spatial_grid_px": spatial_heatmap(table.y[eval_sel], errors),
        "bright_dark": split,
        "subset_eval": bool(parse_variant(variant).vector_only),
        "total_rows": total_rows,
        "evaluated_rows": evaluated_rows,
        "masked_rows": total_rows - evaluated_rows,
        "evaluated_fraction": evaluated_rows / total_rows,
        "baseline_centroid_px": float(base_err.mean()),
        "folds": folds,
    }


def z_scores_across_variants(variant_reports: dict) -> dict | None:
    """Within-participant z-scores of per-participant mean errors across
    variants (sample sd), averaged per variant. None with < 2 variants."""
    names = list(variant_reports)
    if len(names) < 2:
        return None
    pids = sorted(variant_reports[names[0]]["per_participant"])
    z_sum = {v: [] for v in names}
    for pid in pids:
        vals = np.array(
            [variant_reports[v]["per_participant"][pid]["mean_px"] for v in names]
        )
        sd = vals.std(ddof=1)
        if sd == 0:
            z = np.zeros(len(vals))
        else:
            z = (vals - vals.mean()) / sd
        for v, zv in zip(names, z):
            z_sum[v].append(float(zv))
    return {v: float(np.mean(zs)) for v, zs in z_sum.items()}


def evaluate_variants(table: FeatureTable, variants: list[str], **train_kwargs) -> dict:
    """Full evaluation report over several variants, schema-versioned."""
    variant_reports = {}
    for v in variants:
        variant_reports[v] = loocv_eval(table, v, **train_kwargs)

    bright = table.brightness == "bright"
    masked = table.X.vector_masks.any(axis=1)
    extraction = {
        "masked_rate": float(masked.mean()),
        "masked_rate_bright": float(masked[bright].mean()) if bright.any() else None,
        "masked_rate_dark": float(masked[~bright].mean()) if (~bright).any() else None,
        "degraded_rate": float(table.degraded.mean()),
    }

    cfg = dict(train_kwargs)
    cfg.setdefault("epochs", 20)
    cfg.setdefault("batch_size", 64)
    cfg.setdefault("learning_rate", 3e-5)
    cfg.setdefault("seed", 0)

    return {
        "schema": REPORT_SCHEMA,
        "generator": f"hifigaze {__version__}",
        "n_participants": int(len(np.unique(table.participants))),
        "n_rows": int(len(table)),
        "px_per_cm": PX_PER_CM,
        "screen_dims": list(table.screen_dims),
        "train_config": cfg,
        "extraction": extraction,
        "variants": variant_reports,
        "z_scores": z_scores_across_variants(variant_reports),
        "z_score_method": "per-participant variant means, sample sd",
    }


def write_report(report: dict, path) -> None:
    """Deterministic JSON serialization (sorted keys, repr floats)."""
    with open(path, "w") as f:
        json.dump(report, f, sort_keys=True, indent=1)
        f.write("\n")


# ---------------------------------------------------------------------------
# Benchmarks


def bench(manifest_path, n_frames: int = 40, variant: str = "eb+ec+rv", seed: int = 0) -> dict:
    """Median/p95 wall time per pipeline stage over a manifest sample.

    Reports orderings and counted work, not absolute gates: stages are iris
    location, thumbnail construction, multi-scale matching, and model
    inference (a fresh seeded model of the given variant).
    """
    from .features import _eye_crop_feature
    from .imaging import read_png
    from .model import init_params

    manifest_path = Path(manifest_path)
    rows = [r for r in load_manifest(manifest_path) if not (r.get("in_warmup") or r.get("blink"))]
    if len(rows) < 20:
        raise TooFewParticipants(f"bench needs >= 20 frames, got {len(rows)}")
    rows = rows[:n_frames]
    base = manifest_path.parent

    reg = GazeRegressor(variant=variant, seed=seed)
    reg.params_ = init_params(reg._spec(), seed)

    timings = {"iris_locate": [], "thumbnail": [], "multiscale_match": [], "model_inference": []}
    for i, row in enumerate(rows):
        eye = read_png(base / row["frame_png"])
        screen = read_png(base / row["screen_png"])
        init = row["iris_init"]
        est = InitialIrisEstimate(init["cx"], init["cy"], init["w"], init["h"])

        t0 = time.perf_counter()
        fit = locate_iris(eye, est, seed=i)
        t1 = time.perf_counter()
        thumb = make_thumbnail(screen)
        t2 = time.perf_counter()
        match = multiscale_match(eye, fit.circle, thumb)
        t3 = time.perf_counter()

        crop_plane = _eye_crop_feature(eye, fit.circle)
        X = FeatureArrays(
            bounds=np.asarray([row["eye_corners"]], dtype=np.float32),
            vectors=np.zeros((1, 4), np.float32),
            vector_masks=np.zeros((1, 2), bool),
            crops=np.broadcast_to(crop_plane[np.newaxis, np.newaxis], (1, 2) + crop_plane.shape),
            thumbs=(thumb.image.astype(np.float32) / 255.0)[np.newaxis],
            heatmaps=np.broadcast_to(match.heatmap[np.newaxis, np.newaxis], (1, 2) + match.heatmap.shape),
        )
        t4 = time.perf_counter()
        reg.predict(X)
        t5 = time.perf_counter()

        timings["iris_locate"].append(t1 - t0)
        timings["thumbnail"].append(t2 - t1)
        timings["multiscale_match"].append(t3 - t2)
        timings["model_inference"].append(t5 - t4)

    stages = {}
    for name, vals in timings.items():
        arr = np.asarray(vals) * 1000.0
        stages[name] = {
            "median_ms": float(np.median(arr)),
            "p95_ms": float(np.percentile(arr, 95)),
            "n": int(len(arr)),
        }
    return {
        "schema": BENCH_SCHEMA,
        "n_frames": len(rows),
        "variant": variant,
        "stages": stages,
        "counters": {"template_evals_per_eye": N_SCALES},
    }
