"""Screen-reflection localization via multi-scale normalized cross-correlation
of the screen-content thumbnail over an inner-iris search region, plus the
normalized reflection-vector encoding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ScreenTooSmall, TemplateTooLarge
from .imaging import Rect, crop, gaussian_blur, resize, to_gray
from .iris import IrisCircle
from .validation import check_image

THUMB_W = 50
THUMB_H = 101

# Native screen raster width the default blur sigma is calibrated for.
NATIVE_SCREEN_W = 1290
DEFAULT_BLUR_SIGMA = 8.0

# Search region and base template size as fractions of the iris width.
REGION_W_FACTOR = 0.4
REGION_H_FACTOR = 0.55
TEMPLATE_W_FACTOR = 0.1
N_SCALES = 7  # base width plus one to six extra pixels

# Standardized heatmap dims fed to the model.
HEATMAP_W = 40
HEATMAP_H = 55

TAU_PRESENCE = 0.35
# Below this variance (on a 0..1 scale) a thumbnail is uniform: no reflection
# can be localized from it.
MIN_THUMB_VARIANCE = 1e-3


@dataclass(frozen=True)
class Thumbnail:
    """Grayscale 50x101 screen-content thumbnail."""

    image: np.ndarray  # (101, 50) uint8
    source_dims: tuple[int, int]  # (w, h) of the source raster
    mean_luma: float

    @property
    def variance(self) -> float:
        """Pixel variance on a 0..1 scale."""
        return float(np.var(self.image.astype(np.float64) / 255.0))


@dataclass
class MatchResult:
    heatmap: np.ndarray  # standardized (55, 40) float32
    peak_score: float
    reflection_box: Rect  # eye-image coords; meaningless when present=False
    template_scale: tuple[int, int]  # (w, h) of the winning template
    present: bool


@dataclass(frozen=True)
class ReflectionVector:
    """Iris-center-to-reflection-center offset, normalized by the reflection
    box so each axis nominally spans [-0.5, 0.5]; (0, 0) when masked."""

    vx: float
    vy: float
    masked: bool


def make_thumbnail(screen: np.ndarray, blur_sigma: float | None = None) -> Thumbnail:
    """Gray -> Gaussian blur -> bilinear downscale to 50x101.

    blur_sigma defaults to 8.0 at the native 1290-wide raster and scales
    proportionally with the actual raster width.
    """
    screen = check_image(screen, "screen")
    h, w = screen.shape[:2]
    if w < THUMB_W or h < THUMB_H:
        raise ScreenTooSmall(f"screen {w}x{h} smaller than {THUMB_W}x{THUMB_H}")
    if blur_sigma is None:
        blur_sigma = DEFAULT_BLUR_SIGMA * w / NATIVE_SCREEN_W
    gray = to_gray(screen)
    blurred = gaussian_blur(gray, blur_sigma)
    thumb = resize(blurred, THUMB_W, THUMB_H)
    return Thumbnail(thumb, (w, h), float(thumb.mean()))


def crop_search_region(eye_img: np.ndarray, iris: IrisCircle) -> tuple[np.ndarray, tuple[int, int]]:
    """Inner-iris search window: 0.4 x iris width wide, 0.55 x tall,
    centered on the iris center. Returns (region, origin) with origin in
    eye-image coords for mapping peaks back."""
    w = int(round(REGION_W_FACTOR * iris.diameter))
    h = int(round(REGION_H_FACTOR * iris.diameter))
    w, h = max(w, 1), max(h, 1)
    x0 = int(round(iris.cx - w / 2.0))
    y0 = int(round(iris.cy - h / 2.0))
    region = crop(eye_img, Rect(x0, y0, w, h))
    return region, (x0, y0)


def ncc_heatmap(region: np.ndarray, template: np.ndarray) -> np.ndarray:
    """Zero-normalized cross-correlation of the template at every valid
    placement. Output dims (rh-th+1, rw-tw+1); placements where either the
    window or the template has zero variance score 0."""
    region = np.asarray(region, dtype=np.float64)
    template = np.asarray(template, dtype=np.float64)
    if region.ndim != 2 or template.ndim != 2:
        raise ValueError("region and template must be single-channel")
    rh, rw = region.shape
    th, tw = template.shape
    if th > rh or tw > rw:
        raise TemplateTooLarge(f"template {tw}x{th} exceeds region {rw}x{rh}")

    t = template - template.mean()
    t_ss = float(t.ravel() @ t.ravel())
    out_h, out_w = rh - th + 1, rw - tw + 1
    if t_ss <= 1e-12:
        return np.zeros((out_h, out_w), dtype=np.float32)

    wins = np.lib.stride_tricks.sliding_window_view(region, (th, tw))
    flat = wins.reshape(out_h * out_w, th * tw)
    n = th * tw
    s1 = flat.sum(axis=1)
    s2 = (flat * flat).sum(axis=1)
    win_ss = s2 - s1 * s1 / n  # sum of squared deviations per window
    cross = flat @ t.ravel()  # window mean cancels against zero-mean template

    denom = np.sqrt(np.maximum(win_ss, 0.0) * t_ss)
    ncc = np.zeros(out_h * out_w)
    ok = denom > 1e-12
    ncc[ok] = cross[ok] / denom[ok]
    return np.clip(ncc, -1.0, 1.0).reshape(out_h, out_w).astype(np.float32)


def template_widths(iris: IrisCircle) -> list[int]:
    """The 7 candidate template widths: base 0.1 x iris width plus 0..6 px."""
    w0 = max(int(round(TEMPLATE_W_FACTOR * iris.diameter)), 2)
    return [w0 + k for k in range(N_SCALES)]


def scaled_template_dims(width: int) -> tuple[int, int]:
    """Template height follows the 50:101 thumbnail aspect."""
    return width, max(int(round(width * THUMB_H / THUMB_W)), 1)


def multiscale_match(
    eye_img: np.ndarray,
    iris: IrisCircle,
    thumb: Thumbnail,
    tau_presence: float = TAU_PRESENCE,
) -> MatchResult:
    """Correlate the thumbnail over the search region at 7 template scales
    and keep the scale with the strongest peak (ties -> smaller scale).

    The winning heatmap is standardized to 40x55. present=False when the
    thumbnail is uniform, no scale fits, or the peak falls below the
    presence threshold; the standardized heatmap is then all zeros."""
    region, origin = crop_search_region(eye_img, iris)
    region_gray = to_gray(region)

    absent = MatchResult(
        heatmap=np.zeros((HEATMAP_H, HEATMAP_W), dtype=np.float32),
        peak_score=0.0,
        reflection_box=Rect(origin[0], origin[1], 1, 1),
        template_scale=(0, 0),
        present=False,
    )
    if thumb.variance < MIN_THUMB_VARIANCE:
        return absent

    rh, rw = region_gray.shape
    best = None  # (peak, heatmap, (px, py), (tw, th))
    for w in template_widths(iris):
        tw, th = scaled_template_dims(w)
        if tw > rw or th > rh:
            continue
        template = resize(thumb.image, tw, th)
        hm = ncc_heatmap(region_gray, template)
        peak = float(hm.max())
        if best is None or peak > best[0]:
            py, px = np.unravel_index(int(hm.argmax()), hm.shape)
            best = (peak, hm, (int(px), int(py)), (tw, th))

    if best is None or best[0] < tau_presence:
        if best is not None:
            absent.heatmap = resize(best[1], HEATMAP_W, HEATMAP_H).astype(np.float32)
            absent.peak_score = best[0]
            absent.template_scale = best[3]
        return absent

    peak, hm, (px, py), (tw, th) = best
    box = Rect(origin[0] + px, origin[1] + py, tw, th)
    return MatchResult(
        heatmap=resize(hm, HEATMAP_W, HEATMAP_H).astype(np.float32),
        peak_score=peak,
        reflection_box=box,
        template_scale=(tw, th),
        present=True,
    )


def reflection_vector(iris: IrisCircle, match: MatchResult) -> ReflectionVector:
    """Vector from the iris center to the reflection-box center, normalized
    by the box dims. +vy corresponds to screen-top gaze (the reflection sits
    below the iris center in image coordinates). (0, 0) and masked when the
    reflection is absent."""
    if not match.present:
        return ReflectionVector(0.0, 0.0, masked=True)
    box = match.reflection_box
    vx = (box.cx - iris.cx) / box.w
    vy = (box.cy - iris.cy) / box.h
    return ReflectionVector(float(vx), float(vy), masked=False)
