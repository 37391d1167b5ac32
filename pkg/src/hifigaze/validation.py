"""Input validation helpers shared by the public API surface."""

from __future__ import annotations

import numpy as np


def check_image(img: np.ndarray, name: str = "image") -> np.ndarray:
    """Validate an 8-bit raster: (H, W) or (H, W, 3) uint8, non-empty."""
    img = np.asarray(img)
    if img.dtype != np.uint8:
        raise ValueError(f"{name} must be uint8, got {img.dtype}")
    if img.ndim == 2:
        pass
    elif img.ndim == 3 and img.shape[2] == 3:
        pass
    else:
        raise ValueError(f"{name} must be (H, W) or (H, W, 3), got shape {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"{name} must be at least 1x1, got shape {img.shape}")
    return img


def check_plane(plane: np.ndarray, name: str = "plane") -> np.ndarray:
    """Validate a float plane: 2-D, finite, returned as float32."""
    plane = np.asarray(plane)
    if plane.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {plane.shape}")
    if plane.shape[0] < 1 or plane.shape[1] < 1:
        raise ValueError(f"{name} must be at least 1x1, got shape {plane.shape}")
    plane = plane.astype(np.float32, copy=False)
    if not np.all(np.isfinite(plane)):
        raise ValueError(f"{name} contains non-finite values")
    return plane


def check_points(pts: np.ndarray, name: str = "points", min_count: int = 0) -> np.ndarray:
    """Validate an (N, 2) float point array."""
    pts = np.asarray(pts, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"{name} must be (N, 2), got shape {pts.shape}")
    if len(pts) < min_count:
        raise ValueError(f"{name} needs at least {min_count} rows, got {len(pts)}")
    if not np.all(np.isfinite(pts)):
        raise ValueError(f"{name} contains non-finite values")
    return pts


def check_gaze_array(a: np.ndarray, name: str = "gaze") -> np.ndarray:
    """Validate an (N, 2) finite gaze/prediction array, returned as float64."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != 2:
        raise ValueError(f"{name} must be (N, 2), got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    return a
