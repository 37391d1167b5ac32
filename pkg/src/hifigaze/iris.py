"""Iris-center refinement: trimap seeding, GrabCut segmentation, contour
filtering, RANSAC outlier rejection, and geometric least-squares circle fit.

Takes the noisy initial iris estimate a landmark detector would produce and
returns a stable iris circle in eye-crop pixel coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import cv2
import numpy as np

from .errors import (
    CollinearPoints,
    DegenerateTrimap,
    EmptyMask,
    EstimateOutOfFrame,
    NoConsensus,
    TooFewPoints,
)
from .validation import check_image, check_points

# Trimap labels, ordered so that >= PROB_FG means foreground.
TRIMAP_BG = 0
TRIMAP_PROB_BG = 1
TRIMAP_PROB_FG = 2
TRIMAP_FG = 3

# Trimap radii as multiples of the estimate's height (r1) and width (r2, r3).
R1_HEIGHT_FACTOR = 0.4
R2_WIDTH_FACTOR = 0.5
R3_WIDTH_FACTOR = 0.65

GRABCUT_ITERS = 5

# RANSAC defaults, tuned for 500x250 eye crops.
RANSAC_ITERS = 200
RANSAC_TOL = 1.5

EYELID_MIN_ANGLE = 45.0
_TANGENT_WINDOW = 2


@dataclass(frozen=True)
class InitialIrisEstimate:
    """Noisy iris center/size estimate in eye-crop pixels."""

    cx: float
    cy: float
    width: float
    height: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("estimate width/height must be positive")


@dataclass(frozen=True)
class IrisCircle:
    cx: float
    cy: float
    r: float

    def __post_init__(self):
        if not (self.r > 0 and np.isfinite(self.cx) and np.isfinite(self.cy)):
            raise ValueError(f"invalid iris circle ({self.cx}, {self.cy}, r={self.r})")

    @property
    def diameter(self) -> float:
        return 2.0 * self.r


@dataclass
class Contour:
    """Ordered boundary points with per-point tangent angles.

    points: (N, 2) float array of (x, y); angles: (N,) degrees in [0, 90],
    the acute angle between the local tangent and the horizontal axis.
    """

    points: np.ndarray
    angles: np.ndarray

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class IrisFit:
    circle: IrisCircle
    degraded: bool
    n_contour: int = 0
    n_inliers: int = 0


def build_trimap(crop_shape: tuple[int, int], est: InitialIrisEstimate) -> np.ndarray:
    """Concentric-disk trimap about the initial estimate.

    r1 = 0.4*height -> definite FG, r2 = 0.5*width -> probable FG,
    r3 = 0.65*width -> probable BG, beyond -> definite BG.
    """
    h, w = crop_shape
    if not (0 <= est.cx < w and 0 <= est.cy < h):
        raise EstimateOutOfFrame(
            f"estimate center ({est.cx}, {est.cy}) outside {w}x{h} crop"
        )
    r1 = R1_HEIGHT_FACTOR * est.height
    r2 = R2_WIDTH_FACTOR * est.width
    r3 = R3_WIDTH_FACTOR * est.width
    trimap = np.full((h, w), TRIMAP_BG, dtype=np.uint8)
    # Distances only matter inside the r3 disk; label that bounding box.
    y0, y1 = max(int(est.cy - r3) - 1, 0), min(int(est.cy + r3) + 2, h)
    x0, x1 = max(int(est.cx - r3) - 1, 0), min(int(est.cx + r3) + 2, w)
    yy, xx = np.mgrid[y0:y1, x0:x1]
    d = np.hypot(xx - est.cx, yy - est.cy)
    sub = trimap[y0:y1, x0:x1]
    sub[d <= r3] = TRIMAP_PROB_BG
    sub[d <= r2] = TRIMAP_PROB_FG
    sub[d <= r1] = TRIMAP_FG
    # The definite-FG region must be non-empty even for tiny estimates.
    trimap[int(round(est.cy)), int(round(est.cx))] = TRIMAP_FG
    return trimap


_TO_CV = {
    TRIMAP_BG: cv2.GC_BGD,
    TRIMAP_PROB_BG: cv2.GC_PR_BGD,
    TRIMAP_PROB_FG: cv2.GC_PR_FGD,
    TRIMAP_FG: cv2.GC_FGD,
}


def segment_iris(eye_crop: np.ndarray, trimap: np.ndarray, seed: int = 0) -> np.ndarray:
    """GrabCut segmentation seeded by the trimap; 5 iterations.

    Returns a float32 0/1 mask of the crop's dimensions. Definite pixels
    never change label. Deterministic for a given (crop, trimap, seed).
    """
    eye_crop = check_image(eye_crop, "eye_crop")
    trimap = np.asarray(trimap)
    if trimap.shape != eye_crop.shape[:2]:
        raise ValueError("trimap dims must match the eye crop")
    n_fg = int(np.count_nonzero(trimap == TRIMAP_FG))
    n_bg = int(np.count_nonzero(trimap == TRIMAP_BG))
    if n_fg == 0 or n_bg == 0:
        raise DegenerateTrimap(f"trimap has {n_fg} definite FG / {n_bg} definite BG")

    mask_fg = trimap >= TRIMAP_PROB_FG
    n_prob = int(np.count_nonzero((trimap == TRIMAP_PROB_BG) | (trimap == TRIMAP_PROB_FG)))
    if n_prob == 0:
        return mask_fg.astype(np.float32)

    # Only pixels inside the probable region can flip: run GrabCut on a
    # bounding ROI around the non-definite-BG area to keep the cut small.
    ys, xs = np.nonzero(trimap != TRIMAP_BG)
    margin = 8
    y0, y1 = max(int(ys.min()) - margin, 0), min(int(ys.max()) + margin + 1, trimap.shape[0])
    x0, x1 = max(int(xs.min()) - margin, 0), min(int(xs.max()) + margin + 1, trimap.shape[1])

    roi = eye_crop[y0:y1, x0:x1]
    if roi.ndim == 2:
        roi = cv2.cvtColor(roi, cv2.COLOR_GRAY2BGR)
    roi = np.ascontiguousarray(roi)

    cv_mask = np.empty((y1 - y0, x1 - x0), dtype=np.uint8)
    sub = trimap[y0:y1, x0:x1]
    for ours, theirs in _TO_CV.items():
        cv_mask[sub == ours] = theirs

    cv2.setRNGSeed(seed & 0x7FFFFFFF)
    cv2.grabCut(
        roi,
        cv_mask,
        None,
        np.zeros((1, 65), np.float64),
        np.zeros((1, 65), np.float64),
        GRABCUT_ITERS,
        cv2.GC_INIT_WITH_MASK,
    )

    out = np.zeros(trimap.shape, dtype=np.float32)
    out[y0:y1, x0:x1] = ((cv_mask == cv2.GC_FGD) | (cv_mask == cv2.GC_PR_FGD)).astype(
        np.float32
    )
    return out


def extract_contour(mask: np.ndarray) -> Contour:
    """Ordered outer boundary of the largest 8-connected foreground component.

    Local angles come from the tangent over a +/-2-point window along the
    boundary. A single-pixel component yields one point with angle 0.
    """
    mask = np.asarray(mask)
    fg = (mask > 0.5).astype(np.uint8)
    if not fg.any():
        raise EmptyMask("mask has no foreground pixels")

    contours, _ = cv2.findContours(fg, cv2.RETR_EXTERNAL, cv2.CHAIN_APPROX_NONE)
    best = max(contours, key=lambda c: (cv2.contourArea(c), len(c)))
    pts = best.reshape(-1, 2).astype(np.float64)  # (N, 2) as (x, y)

    n = len(pts)
    if n <= 2 * _TANGENT_WINDOW:
        angles = np.zeros(n)
        if n >= 2:
            t = pts[-1] - pts[0]
            angles[:] = _acute_angle(t[0], t[1])
        return Contour(pts, angles)

    fwd = np.roll(pts, -_TANGENT_WINDOW, axis=0)
    back = np.roll(pts, _TANGENT_WINDOW, axis=0)
    t = fwd - back
    angles = _acute_angle(t[:, 0], t[:, 1])
    return Contour(pts, angles)


def _acute_angle(tx, ty):
    """Acute angle (degrees, [0, 90]) between a tangent and the horizontal."""
    return np.degrees(np.arctan2(np.abs(ty), np.abs(tx)))


def filter_eyelid_points(contour: Contour, min_angle: float = EYELID_MIN_ANGLE) -> Contour:
    """Drop boundary points whose tangent is flatter than min_angle degrees.

    Eyelid edges run near-horizontal, iris arcs near-vertical; the 45-degree
    cut keeps the left/right iris arcs and removes lid-contaminated spans.
    """
    keep = contour.angles >= min_angle
    return Contour(contour.points[keep], contour.angles[keep])


def fit_circle_lsq(pts: np.ndarray) -> IrisCircle:
    """Geometric least-squares circle: Kasa init refined by Gauss-Newton.

    Minimizes sum((|p - c| - r)^2). Damped steps keep the residual
    non-increasing; converges when the step norm drops below 1e-9.
    """
    pts = check_points(pts, "pts")
    if len(pts) < 3:
        raise TooFewPoints(f"need >= 3 points, got {len(pts)}")
    x, y = pts[:, 0], pts[:, 1]

    # Algebraic (Kasa) fit: x^2 + y^2 = 2ax + 2by + c.
    A = np.column_stack([2 * x, 2 * y, np.ones(len(pts))])
    rhs = x * x + y * y
    sol, _, rank, _ = np.linalg.lstsq(A, rhs, rcond=None)
    if rank < 3:
        raise CollinearPoints("points are collinear")
    a, b = sol[0], sol[1]
    r2 = sol[2] + a * a + b * b
    if r2 <= 0:
        raise CollinearPoints("degenerate algebraic fit")
    params = np.array([a, b, np.sqrt(r2)])

    def residuals(p):
        d = np.hypot(x - p[0], y - p[1])
        return d - p[2], d

    res, _ = residuals(params)
    ssr = float(res @ res)
    for _ in range(100):
        d = np.hypot(x - params[0], y - params[1])
        d = np.maximum(d, 1e-12)
        J = np.column_stack([-(x - params[0]) / d, -(y - params[1]) / d, -np.ones(len(pts))])
        g = J.T @ res
        H = J.T @ J
        try:
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            break
        # Halve the step while it would increase the residual.
        scale = 1.0
        for _ in range(20):
            cand = params + scale * step
            cres, _ = residuals(cand)
            cssr = float(cres @ cres)
            if cssr <= ssr or scale < 1e-8:
                break
            scale *= 0.5
        if cssr > ssr:
            break
        params, res, ssr = cand, cres, cssr
        if np.linalg.norm(scale * step) < 1e-9:
            break
    return IrisCircle(float(params[0]), float(params[1]), float(abs(params[2])))


def _circumcircles(p0, p1, p2):
    """Vectorized circumscribed circles of point triples.

    Returns (cx, cy, r, valid); near-collinear triples are flagged invalid.
    """
    ax, ay = p0[:, 0], p0[:, 1]
    bx, by = p1[:, 0], p1[:, 1]
    cx, cy = p2[:, 0], p2[:, 1]
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    valid = np.abs(d) > 1e-9
    d = np.where(valid, d, 1.0)
    a2 = ax * ax + ay * ay
    b2 = bx * bx + by * by
    c2 = cx * cx + cy * cy
    ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d
    uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d
    r = np.hypot(ax - ux, ay - uy)
    return ux, uy, r, valid


def ransac_circle(
    pts: np.ndarray,
    n_iter: int = RANSAC_ITERS,
    inlier_tol: float = RANSAC_TOL,
    seed: int = 0,
) -> tuple[np.ndarray, IrisCircle]:
    """RANSAC circle: sample 3-point circumcircles, keep the largest
    consensus set (ties broken by the candidate's inlier residual), then
    refit the winners with fit_circle_lsq.

    Samples are drawn over points sorted by (y, x), so the result is
    invariant to input permutation. Returns (inlier indices into the
    input order, fitted circle).
    """
    pts = check_points(pts, "pts")
    n = len(pts)
    if n < 3:
        raise TooFewPoints(f"need >= 3 points, got {n}")

    order = np.lexsort((pts[:, 0], pts[:, 1]))
    spts = pts[order]
    rng = np.random.default_rng(seed)
    # Distinct index triples, drawn in bulk; rows with a repeat are redrawn.
    triples = rng.integers(0, n, size=(n_iter, 3))
    while True:
        dup = (
            (triples[:, 0] == triples[:, 1])
            | (triples[:, 0] == triples[:, 2])
            | (triples[:, 1] == triples[:, 2])
        )
        if not dup.any():
            break
        triples[dup] = rng.integers(0, n, size=(int(dup.sum()), 3))

    cx, cy, r, valid = _circumcircles(
        spts[triples[:, 0]], spts[triples[:, 1]], spts[triples[:, 2]]
    )
    # (n_iter, n) distance residuals against every candidate circle.
    dist = np.hypot(
        spts[np.newaxis, :, 0] - cx[:, np.newaxis],
        spts[np.newaxis, :, 1] - cy[:, np.newaxis],
    )
    resid = np.abs(dist - r[:, np.newaxis])
    inlier_mat = resid <= inlier_tol
    counts = np.where(valid, inlier_mat.sum(axis=1), -1)

    best_count = int(counts.max())
    if best_count < 3:
        raise NoConsensus("no 3-point sample produced a consensus set")
    tied = np.nonzero(counts == best_count)[0]
    if len(tied) > 1:
        ssr = np.array(
            [float(np.sum(resid[i, inlier_mat[i]] ** 2)) for i in tied]
        )
        best = int(tied[np.argmin(ssr)])
    else:
        best = int(tied[0])

    inliers_sorted = np.nonzero(inlier_mat[best])[0]
    circle = fit_circle_lsq(spts[inliers_sorted])
    inlier_idx = np.sort(order[inliers_sorted])
    return inlier_idx, circle


def locate_iris(
    eye_crop: np.ndarray,
    est: InitialIrisEstimate,
    n_iter: int = RANSAC_ITERS,
    inlier_tol: float = RANSAC_TOL,
    seed: int = 0,
) -> IrisFit:
    """Full refinement pipeline: trimap -> GrabCut -> contour -> eyelid
    filter -> RANSAC -> least-squares refit.

    Falls back to the initial estimate (radius = width/2, degraded=True)
    when the crop has no usable contrast or no circle consensus emerges.
    """
    eye_crop = check_image(eye_crop, "eye_crop")
    trimap = build_trimap(eye_crop.shape[:2], est)

    fallback = IrisFit(
        IrisCircle(est.cx, est.cy, est.width / 2.0), degraded=True
    )
    if float(np.std(to_gray_luma(eye_crop))) < 1.0:
        return fallback

    mask = segment_iris(eye_crop, trimap, seed=seed)
    try:
        contour = extract_contour(mask)
    except EmptyMask:
        return fallback
    kept = filter_eyelid_points(contour)
    if len(kept) < 3:
        return fallback
    try:
        inliers, circle = ransac_circle(
            kept.points, n_iter=n_iter, inlier_tol=inlier_tol, seed=seed
        )
    except (NoConsensus, CollinearPoints):
        return fallback
    return IrisFit(circle, degraded=False, n_contour=len(contour), n_inliers=len(inliers))


def to_gray_luma(img: np.ndarray) -> np.ndarray:
    """Float luma without rounding, for contrast checks."""
    if img.ndim == 2:
        return img.astype(np.float64)
    return img.astype(np.float64) @ np.array([0.299, 0.587, 0.114])
