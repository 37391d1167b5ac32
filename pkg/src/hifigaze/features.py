"""Per-frame feature extraction and the on-disk feature table.

For every non-warmup, non-blink manifest row: refine the iris from the
logged initial estimate, localize the screen reflection against the logged
content, and emit eye bounds, reflection vectors/masks, peak scores, and
plane artifacts (64x32 eye-crop, 40x55 standardized heatmap, 50x101 screen
thumbnail). The simulator is monocular, so the single measured eye fills
both left/right slots of the two-eye model interface.

Layout of a features directory:
  features.csv   one row per frame (header documented in FEATURE_COLUMNS)
  meta.json      screen dims, source manifest, counts
  planes/        crop_*.png, hm_*.hfg1, thumb_*.hfg1 (deduplicated), masks/
"""

from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .imaging import Rect, crop, read_png, resize, to_gray, write_plane, read_plane, write_png
from .iris import InitialIrisEstimate, IrisCircle, locate_iris
from .matching import TAU_PRESENCE, Thumbnail, make_thumbnail, multiscale_match, reflection_vector
from .model import CROP_SHAPE, FeatureArrays, HEATMAP_SHAPE, THUMB_SHAPE
from .simulator import load_manifest

log = logging.getLogger(__name__)

# Eye-crop feature patch, in iris widths, downscaled to CROP_SHAPE.
CROP_PATCH_W_FACTOR = 2.8
CROP_PATCH_H_FACTOR = 1.4

FEATURE_COLUMNS = [
    "participant_id",
    "session",
    "frame",
    "t_s",
    "camera",
    "eb_lx", "eb_ly", "eb_rx", "eb_ry",
    "vx_l", "vy_l", "mask_l",
    "vx_r", "vy_r", "mask_r",
    "peak_l", "peak_r",
    "crop_l", "crop_r",
    "heatmap_l", "heatmap_r",
    "thumb",
    "gaze_x", "gaze_y",
    "brightness_class",
    "occluded_fraction",
    "degraded",
]


@dataclass
class FeatureTable:
    """In-memory feature corpus: FeatureArrays plus row metadata."""

    X: FeatureArrays
    y: np.ndarray  # (N, 2) gaze px
    participants: np.ndarray  # (N,) int
    sessions: np.ndarray
    brightness: np.ndarray  # (N,) str
    occluded: np.ndarray  # (N,) float
    peaks: np.ndarray  # (N, 2)
    degraded: np.ndarray  # (N,) bool
    screen_dims: tuple[int, int]

    def __len__(self) -> int:
        return len(self.y)

    @property
    def masked_rate(self) -> float:
        """Fraction of rows with any masked eye vector."""
        return float(self.X.vector_masks.any(axis=1).mean())

    def take(self, idx) -> "FeatureTable":
        return FeatureTable(
            X=self.X.take(idx),
            y=self.y[idx],
            participants=self.participants[idx],
            sessions=self.sessions[idx],
            brightness=self.brightness[idx],
            occluded=self.occluded[idx],
            peaks=self.peaks[idx],
            degraded=self.degraded[idx],
            screen_dims=self.screen_dims,
        )


def _eye_crop_feature(eye_img: np.ndarray, iris: IrisCircle) -> np.ndarray:
    """2.8 x 1.4 iris-width patch around the iris, grayscale, 64x32."""
    w = int(round(CROP_PATCH_W_FACTOR * iris.diameter))
    h = int(round(CROP_PATCH_H_FACTOR * iris.diameter))
    x0 = int(round(iris.cx - w / 2.0))
    y0 = int(round(iris.cy - h / 2.0))
    patch = to_gray(crop(eye_img, Rect(x0, y0, max(w, 1), max(h, 1))))
    return resize(patch, CROP_SHAPE[1], CROP_SHAPE[0])


def extract_features(
    manifest_path,
    out_dir,
    blur_sigma: float | None = None,
    tau_presence: float = TAU_PRESENCE,
    dump_masks: bool = False,
) -> Path:
    """Run the measurement pipeline over a manifest; returns the features dir.

    Warmup and blink rows are excluded. Per-frame failures mark the row
    degraded (with the initial estimate as iris fallback) instead of
    aborting the batch.
    """
    manifest_path = Path(manifest_path)
    rows = load_manifest(manifest_path)
    base = manifest_path.parent
    out_dir = Path(out_dir)
    planes = out_dir / "planes"
    planes.mkdir(parents=True, exist_ok=True)
    if dump_masks:
        (planes / "masks").mkdir(exist_ok=True)

    thumb_cache: dict[str, tuple[str, Thumbnail]] = {}
    out_rows = []
    n_skipped = 0
    screen_dims = None

    for i, row in enumerate(rows):
        if row.get("in_warmup") or row.get("blink"):
            n_skipped += 1
            continue
        if screen_dims is None:
            gx, gy = row["gaze_norm"]
            px, py = row["gaze_px"]
            if gx > 1e-9 and gy > 1e-9:
                screen_dims = (int(round(px / gx)), int(round(py / gy)))

        eye = read_png(base / row["frame_png"])
        init = row["iris_init"]
        est = InitialIrisEstimate(init["cx"], init["cy"], init["w"], init["h"])
        seed = (int(row["participant_id"]) << 40) ^ (int(row["session"]) << 20) ^ i

        degraded = False
        try:
            fit = locate_iris(eye, est, seed=seed)
            degraded = fit.degraded
            iris = fit.circle
        except Exception:
            log.exception("iris refinement failed on row %d (%s)", i, row["frame_png"])
            degraded = True
            iris = IrisCircle(est.cx, est.cy, est.width / 2.0)

        screen_key = row["screen_png"]
        if screen_key not in thumb_cache:
            screen = read_png(base / screen_key)
            thumb = make_thumbnail(screen, blur_sigma)
            tname = f"thumb_{len(thumb_cache):05d}.hfg1"
            write_plane(planes / tname, thumb.image.astype(np.float32) / 255.0)
            thumb_cache[screen_key] = (tname, thumb)
        tname, thumb = thumb_cache[screen_key]

        try:
            match = multiscale_match(eye, iris, thumb, tau_presence=tau_presence)
        except Exception:
            log.exception("reflection match failed on row %d (%s)", i, row["frame_png"])
            degraded = True
            from .matching import MatchResult

            match = MatchResult(
                heatmap=np.zeros((HEATMAP_SHAPE[0], HEATMAP_SHAPE[1]), np.float32),
                peak_score=0.0,
                reflection_box=Rect(0, 0, 1, 1),
                template_scale=(0, 0),
                present=False,
            )
        vec = reflection_vector(iris, match)

        rid = len(out_rows)
        crop_name = f"crop_{rid:06d}.png"
        hm_name = f"hm_{rid:06d}.hfg1"
        write_png(planes / crop_name, _eye_crop_feature(eye, iris))
        write_plane(planes / hm_name, match.heatmap)
        if dump_masks:
            from .iris import build_trimap, segment_iris

            try:
                mask = segment_iris(eye, build_trimap(eye.shape[:2], est), seed=seed)
                write_plane(planes / "masks" / f"mask_{rid:06d}.hfg1", mask)
            except Exception:
                log.exception("mask dump failed on row %d", i)

        eb = row["eye_corners"]
        out_rows.append(
            {
                "participant_id": row["participant_id"],
                "session": row["session"],
                "frame": rid,
                "t_s": row["t_s"],
                "camera": row.get("camera", "top"),
                "eb_lx": eb[0], "eb_ly": eb[1], "eb_rx": eb[2], "eb_ry": eb[3],
                "vx_l": vec.vx, "vy_l": vec.vy, "mask_l": int(vec.masked),
                "vx_r": vec.vx, "vy_r": vec.vy, "mask_r": int(vec.masked),
                "peak_l": match.peak_score, "peak_r": match.peak_score,
                "crop_l": f"planes/{crop_name}", "crop_r": f"planes/{crop_name}",
                "heatmap_l": f"planes/{hm_name}", "heatmap_r": f"planes/{hm_name}",
                "thumb": f"planes/{tname}",
                "gaze_x": row["gaze_px"][0], "gaze_y": row["gaze_px"][1],
                "brightness_class": row["brightness_class"],
                "occluded_fraction": row["occluded_fraction"],
                "degraded": int(degraded),
            }
        )

    if screen_dims is None:
        screen_dims = (1290, 2796)

    with open(out_dir / "features.csv", "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=FEATURE_COLUMNS)
        writer.writeheader()
        writer.writerows(out_rows)
    with open(out_dir / "meta.json", "w") as f:
        json.dump(
            {
                "schema": "hifigaze-features-1",
                "source_manifest": os.path.relpath(manifest_path, out_dir),
                "screen_dims": list(screen_dims),
                "n_rows": len(out_rows),
                "n_excluded": n_skipped,
                "tau_presence": tau_presence,
            },
            f,
        )
    return out_dir


def _load_pair(rows, left_col, right_col, shape, dtype, loader):
    """Load a left/right plane pair. Monocular corpora reference the same
    artifact from both slots; those are stored once and exposed as a
    read-only broadcast pair."""
    n = len(rows)
    shared = all(r[left_col] == r[right_col] for r in rows)
    if shared:
        flat = np.empty((n, 1) + shape, dtype)
        for i, r in enumerate(rows):
            flat[i, 0] = loader(r[left_col])
        return np.broadcast_to(flat, (n, 2) + shape)
    out = np.empty((n, 2) + shape, dtype)
    for i, r in enumerate(rows):
        out[i, 0] = loader(r[left_col])
        out[i, 1] = loader(r[right_col])
    return out


def load_features(
    features_dir,
    with_crops: bool = True,
    with_thumbs: bool = True,
    with_heatmaps: bool = True,
) -> FeatureTable:
    """Load a features directory into memory.

    Plane loads can be switched off per group to keep memory down when a
    variant does not need them. The left/right crop and heatmap slots of a
    monocular corpus reference the same artifact; they are stored once and
    exposed as a broadcast (read-only) pair.
    """
    features_dir = Path(features_dir)
    csv_path = features_dir / "features.csv"
    if not csv_path.exists():
        raise DataError(f"no features.csv under {features_dir}")
    with open(features_dir / "meta.json") as f:
        meta = json.load(f)
    with open(csv_path, newline="") as f:
        rows = list(csv.DictReader(f))
    if not rows:
        raise DataError(f"{csv_path} has no rows")

    n = len(rows)
    bounds = np.empty((n, 4), np.float32)
    vectors = np.empty((n, 4), np.float32)
    vmasks = np.empty((n, 2), bool)
    y = np.empty((n, 2), np.float64)
    participants = np.empty(n, np.int64)
    sessions = np.empty(n, np.int64)
    brightness = np.empty(n, object)
    occluded = np.empty(n, np.float64)
    peaks = np.empty((n, 2), np.float64)
    degraded = np.empty(n, bool)

    for i, r in enumerate(rows):
        bounds[i] = (r["eb_lx"], r["eb_ly"], r["eb_rx"], r["eb_ry"])
        vectors[i] = (r["vx_l"], r["vy_l"], r["vx_r"], r["vy_r"])
        vmasks[i] = (int(r["mask_l"]) != 0, int(r["mask_r"]) != 0)
        y[i] = (r["gaze_x"], r["gaze_y"])
        participants[i] = int(r["participant_id"])
        sessions[i] = int(r["session"])
        brightness[i] = r["brightness_class"]
        occluded[i] = float(r["occluded_fraction"])
        peaks[i] = (float(r["peak_l"]), float(r["peak_r"]))
        degraded[i] = int(r["degraded"]) != 0

    crops = thumbs = heatmaps = None
    if with_crops:
        crops = _load_pair(rows, "crop_l", "crop_r", CROP_SHAPE, np.uint8,
                           lambda p: read_png(features_dir / p))
    if with_thumbs:
        cache: dict[str, np.ndarray] = {}
        thumbs = np.empty((n,) + THUMB_SHAPE, np.float32)
        for i, r in enumerate(rows):
            name = r["thumb"]
            if name not in cache:
                cache[name] = read_plane(features_dir / name)
            thumbs[i] = cache[name]
    if with_heatmaps:
        heatmaps = _load_pair(rows, "heatmap_l", "heatmap_r", HEATMAP_SHAPE, np.float32,
                              lambda p: read_plane(features_dir / p))

    X = FeatureArrays(
        bounds=bounds,
        vectors=vectors,
        vector_masks=vmasks,
        crops=crops,
        thumbs=thumbs,
        heatmaps=heatmaps,
    )
    return FeatureTable(
        X=X,
        y=y,
        participants=participants,
        sessions=sessions,
        brightness=np.asarray(brightness, dtype=object),
        occluded=occluded,
        peaks=peaks,
        degraded=degraded,
        screen_dims=tuple(meta["screen_dims"]),
    )
