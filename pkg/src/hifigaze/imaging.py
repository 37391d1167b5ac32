"""Deterministic raster primitives: blur, resize, grayscale, crop, and file IO.

Images are numpy arrays: (H, W) or (H, W, 3) uint8 rasters, or (H, W)
float32 planes (used for correlation heatmaps and masks). All operations
are pure functions over their inputs.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from PIL import Image
from scipy import ndimage

from .errors import DataError
from .validation import check_plane

HFG1_MAGIC = b"HFG1"

# ITU-R 601 luma weights; the grayscale convention for the whole pipeline.
_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class Rect:
    """Integer pixel rectangle; x/y may be negative, w/h >= 1."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError(f"Rect needs w,h >= 1, got {self.w}x{self.h}")

    @property
    def cx(self) -> float:
        return self.x + self.w / 2.0

    @property
    def cy(self) -> float:
        return self.y + self.h / 2.0


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian taps with radius ceil(3*sigma)."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    radius = int(np.ceil(3.0 * sigma))
    if sigma == 0 or radius == 0:
        return np.array([1.0])
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with clamp-to-edge borders.

    uint8 inputs are filtered in float and rounded once at the end;
    float planes stay float. sigma=0 returns the input unchanged.
    """
    img = np.asarray(img)
    k = gaussian_kernel(sigma)
    if len(k) == 1:
        return img.copy()
    out = img.astype(np.float64, copy=False)
    # mode="nearest" replicates the border pixel: clamp-to-edge.
    out = ndimage.correlate1d(out, k, axis=0, mode="nearest")
    out = ndimage.correlate1d(out, k, axis=1, mode="nearest")
    if img.dtype == np.uint8:
        return np.clip(np.rint(out), 0, 255).astype(np.uint8)
    return out.astype(img.dtype, copy=False)


def resize(img: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Bilinear resize with the half-pixel-center coordinate convention.

    Output pixel (ox, oy) samples the source at
    ((ox+0.5)*in_w/out_w - 0.5, (oy+0.5)*in_h/out_h - 0.5), clamped.
    Works for uint8 images (per channel) and float planes.
    """
    img = np.asarray(img)
    if out_w < 1 or out_h < 1:
        raise ValueError(f"output dims must be >= 1, got {out_w}x{out_h}")
    in_h, in_w = img.shape[:2]
    if (in_w, in_h) == (out_w, out_h):
        return img.copy()

    sx = (np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5
    sy = (np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5
    sx = np.clip(sx, 0.0, in_w - 1.0)
    sy = np.clip(sy, 0.0, in_h - 1.0)
    x0 = np.floor(sx).astype(np.intp)
    y0 = np.floor(sy).astype(np.intp)
    x1 = np.minimum(x0 + 1, in_w - 1)
    y1 = np.minimum(y0 + 1, in_h - 1)
    fx = (sx - x0)[np.newaxis, :]
    fy = (sy - y0)[:, np.newaxis]
    if img.ndim == 3:
        fx = fx[..., np.newaxis]
        fy = fy[..., np.newaxis]

    src = img.astype(np.float64, copy=False)
    tl = src[np.ix_(y0, x0)]
    tr = src[np.ix_(y0, x1)]
    bl = src[np.ix_(y1, x0)]
    br = src[np.ix_(y1, x1)]
    top = tl + (tr - tl) * fx
    bot = bl + (br - bl) * fx
    out = top + (bot - top) * fy
    if img.dtype == np.uint8:
        return np.clip(np.rint(out), 0, 255).astype(np.uint8)
    return out.astype(img.dtype, copy=False)


def to_gray(img: np.ndarray) -> np.ndarray:
    """RGB -> luma with ITU-R 601 weights, rounded; grayscale passes through."""
    img = np.asarray(img)
    if img.ndim == 2:
        return img.copy()
    if img.ndim == 3 and img.shape[2] == 3:
        luma = img.astype(np.float64) @ _LUMA
        return np.clip(np.rint(luma), 0, 255).astype(np.uint8)
    raise ValueError(f"expected (H, W) or (H, W, 3), got shape {img.shape}")


def crop(img: np.ndarray, rect: Rect) -> np.ndarray:
    """Extract a rectangle; source pixels outside the image are zero-filled."""
    img = np.asarray(img)
    in_h, in_w = img.shape[:2]
    out_shape = (rect.h, rect.w) + img.shape[2:]
    out = np.zeros(out_shape, dtype=img.dtype)
    x0, y0 = max(rect.x, 0), max(rect.y, 0)
    x1, y1 = min(rect.x + rect.w, in_w), min(rect.y + rect.h, in_h)
    if x0 < x1 and y0 < y1:
        out[y0 - rect.y : y1 - rect.y, x0 - rect.x : x1 - rect.x] = img[y0:y1, x0:x1]
    return out


def read_png(path) -> np.ndarray:
    """Load an 8-bit PNG as (H, W) or (H, W, 3) uint8."""
    with Image.open(path) as im:
        if im.mode == "L":
            return np.asarray(im, dtype=np.uint8)
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def write_png(path, img: np.ndarray) -> None:
    """Save an 8-bit raster as a non-interlaced PNG."""
    img = np.asarray(img)
    mode = "L" if img.ndim == 2 else "RGB"
    Image.fromarray(img, mode).save(path, format="PNG")


def write_plane(path, plane: np.ndarray) -> None:
    """Write a float plane in the HFG1 format (magic, u32le w/h, f32le data)."""
    plane = check_plane(plane)
    h, w = plane.shape
    with open(path, "wb") as f:
        f.write(HFG1_MAGIC)
        f.write(struct.pack("<II", w, h))
        f.write(np.ascontiguousarray(plane, dtype="<f4").tobytes())


def read_plane(path) -> np.ndarray:
    """Read an HFG1 float plane."""
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:4] != HFG1_MAGIC:
        raise DataError(f"{path}: not an HFG1 plane (bad magic)")
    w, h = struct.unpack_from("<II", raw, 4)
    data = np.frombuffer(raw, dtype="<f4", count=w * h, offset=12)
    if data.size != w * h:
        raise DataError(f"{path}: truncated HFG1 payload")
    return data.reshape(h, w).astype(np.float32)
