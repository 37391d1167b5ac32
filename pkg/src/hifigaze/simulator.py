"""Synthetic corneal-reflection oracle.

Renders eye crops with screen reflections from known gaze, generates the
smooth-pursuit target trajectories and screen-content streams used for data
collection, and models top- vs bottom-camera eyelid occlusion. Every random
draw flows from numpy SeedSequence spawn keys of (dataset seed, participant,
session, frame index), so datasets are byte-reproducible.

Conventions: gaze_norm has gy=0 at the screen top. The reflection is
composited at offset ((gx-0.5)*box_w, (0.5-gy)*box_h) from the iris center
in image coordinates (y down): gazing at the screen bottom rotates the eye
down and moves the reflection up toward the upper eyelid. Screen content is
a per-session playlist shared by all participants, and the camera position
never enters seed derivation, so top/bottom corpora at matched seeds differ
only in eyelid geometry.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError
from .imaging import Rect, gaussian_blur, resize, to_gray, write_png
from .iris import IrisCircle
from .matching import DEFAULT_BLUR_SIGMA, NATIVE_SCREEN_W, THUMB_H, THUMB_W

NATIVE_SCREEN_DIMS = (1290, 2796)  # logical gaze space (w, h)
DEFAULT_RENDER_DIMS = (322, 699)  # screen content raster (w, h)
CROP_DIMS = (500, 250)  # eye frame (w, h)

TARGET_SPEED_PX_S = 100.0
H_PATH_EXTENT = 350.0  # px traversed by a horizontal path (3.5 s at 100 px/s)
V_PATH_EXTENT = 710.0  # px traversed by a vertical path (7.1 s)
N_H_PATHS = 9
N_V_PATHS = 5
WARMUP_MS = 500

SCREEN_PERIOD_MS = 400
DISSOLVE_MS = 200
DARK_LUMA_THRESHOLD = 60.0

BOTTOM_CAMERA_OCCLUSION_FACTOR = 0.35
EYELID_SAG_FACTOR = 0.12  # lid-edge parabola sag as a fraction of iris radius

# Stream tags for seed derivation.
_PARTICIPANT, _SESSION, _FRAME, _SCREENS, _TEXTURE = 1, 2, 3, 4, 5


@dataclass
class SceneConfig:
    """Static parameters of one rendered eye scene."""

    screen_dims: tuple[int, int] = NATIVE_SCREEN_DIMS
    crop_dims: tuple[int, int] = CROP_DIMS
    iris_radius: float = 52.0
    iris_center: tuple[float, float] = (250.0, 125.0)
    iris_texture_seed: int = 0
    sclera_luma: float = 215.0
    reflection_gain: float = 0.85
    reflection_base_scale: float = 0.1  # of the iris width
    scale_jitter: float = 0.0  # extra template pixels, in [0, 6]
    eyelid_occlusion: float = 0.0  # base lid coverage of the upper iris
    camera_position: str = "top"  # "top" | "bottom"
    noise_sigma: float = 0.0
    eye_corners: tuple[float, float, float, float] = (0.40, 0.48, 0.55, 0.46)

    def __post_init__(self):
        if self.camera_position not in ("top", "bottom"):
            raise ValueError(f"camera_position must be top|bottom, got {self.camera_position}")
        if not 0.0 <= self.eyelid_occlusion <= 1.0:
            raise ValueError("eyelid_occlusion must be in [0, 1]")
        w, h = self.crop_dims
        cx, cy = self.iris_center
        if not (0 < cx < w and 0 < cy < h):
            raise ValueError("iris center must lie inside the crop")


@dataclass
class GazeTruth:
    gaze_px: tuple[float, float]
    gaze_norm: tuple[float, float]
    iris: IrisCircle
    reflection_box: Rect
    eye_corners: tuple[float, float, float, float]
    occluded_fraction: float
    brightness_class: str  # "bright" | "dark"


@dataclass
class ReflectionGeometry:
    center_offset: tuple[float, float]  # px from the iris center, image coords
    box: Rect
    occluded_fraction: float


@dataclass(frozen=True)
class TrajectorySample:
    t: float  # seconds on the session clock
    gaze_px: tuple[float, float]
    path_id: int
    path_kind: str  # "horizontal" | "vertical"
    in_warmup: bool


def _derive_rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


# ---------------------------------------------------------------------------
# Trajectories


def gen_trajectory(
    screen_dims: tuple[int, int] = NATIVE_SCREEN_DIMS, fps: int = 20
) -> list[TrajectorySample]:
    """Smooth-pursuit target path: 9 horizontal then 5 vertical passes at
    100 px/s, sampled at fps on one continuous session clock. The first
    500 ms of every path is flagged in_warmup. Directions alternate so
    warmup spans are covered by counter-moving passes."""
    if fps <= 0:
        raise ValueError("fps must be positive")
    w, h = screen_dims
    ext_x = H_PATH_EXTENT * w / NATIVE_SCREEN_DIMS[0]
    ext_y = V_PATH_EXTENT * h / NATIVE_SCREEN_DIMS[1]
    cx, cy = w / 2.0, h / 2.0

    paths = []
    ys = cy - ext_y / 2.0 + np.arange(N_H_PATHS) * ext_y / (N_H_PATHS - 1)
    for i, y in enumerate(ys):
        x0 = cx - ext_x / 2.0 if i % 2 == 0 else cx + ext_x / 2.0
        direction = (1.0, 0.0) if i % 2 == 0 else (-1.0, 0.0)
        paths.append(((x0, y), direction, ext_x, "horizontal"))
    xs = cx - ext_x / 2.0 + np.arange(N_V_PATHS) * ext_x / (N_V_PATHS - 1)
    for j, x in enumerate(xs):
        y0 = cy - ext_y / 2.0 if j % 2 == 0 else cy + ext_y / 2.0
        direction = (0.0, 1.0) if j % 2 == 0 else (0.0, -1.0)
        paths.append(((x, y0), direction, ext_y, "vertical"))

    samples = []
    clock_ms = 0
    for path_id, (start, direction, extent, kind) in enumerate(paths):
        duration = extent / TARGET_SPEED_PX_S
        n = int(round(duration * fps))
        for k in range(n):
            t_path_ms = round(k * 1000 / fps)
            tp = t_path_ms / 1000.0
            pos = (
                start[0] + direction[0] * TARGET_SPEED_PX_S * tp,
                start[1] + direction[1] * TARGET_SPEED_PX_S * tp,
            )
            samples.append(
                TrajectorySample(
                    t=(clock_ms + t_path_ms) / 1000.0,
                    gaze_px=pos,
                    path_id=path_id,
                    path_kind=kind,
                    in_warmup=t_path_ms < WARMUP_MS,
                )
            )
        clock_ms += round(n * 1000 / fps)
    return samples


# ---------------------------------------------------------------------------
# Screen content


def _draw_text_block(img, rng, x0, y0, bw, bh, luma):
    """Rows of thin rectangles approximating lines of text."""
    h, w = img.shape
    line_h = max(int(0.009 * h), 2)
    gap = max(int(0.018 * h), line_h + 2)
    y = y0
    while y + line_h <= min(y0 + bh, h):
        lw = int(bw * rng.uniform(0.55, 1.0))
        img[y : y + line_h, x0 : min(x0 + lw, w)] = luma
        y += gap


def draw_screen(rng: np.random.Generator, dark: bool, dims: tuple[int, int]) -> np.ndarray:
    """One synthetic screen: rectangles, bars and text-like strips on a
    bright background, or logo-like bright blobs / near-uniform fields on a
    dark one."""
    w, h = dims
    img = np.empty((h, w), dtype=np.uint8)
    if not dark:
        img[:] = int(rng.uniform(130, 235))
        for _ in range(rng.integers(2, 7)):
            rw = int(w * rng.uniform(0.10, 0.55))
            rh = int(h * rng.uniform(0.04, 0.28))
            x0 = int(rng.uniform(0, max(w - rw, 1)))
            y0 = int(rng.uniform(0, max(h - rh, 1)))
            img[y0 : y0 + rh, x0 : x0 + rw] = int(rng.uniform(25, 255))
        for _ in range(rng.integers(1, 3)):
            bh = max(int(h * rng.uniform(0.03, 0.08)), 2)
            y0 = int(rng.uniform(0, h - bh))
            img[y0 : y0 + bh, :] = int(rng.uniform(40, 220))
        for _ in range(rng.integers(1, 4)):
            bw = int(w * rng.uniform(0.5, 0.85))
            bh = int(h * rng.uniform(0.08, 0.22))
            x0 = int(rng.uniform(0.05 * w, w - bw))
            y0 = int(rng.uniform(0, h - bh))
            _draw_text_block(img, rng, x0, y0, bw, bh, int(rng.uniform(30, 90)))
    else:
        img[:] = int(rng.uniform(4, 32))
        if rng.uniform() < 0.6:
            # Dark UI with small bright elements a matcher can lock onto.
            yy, xx = np.mgrid[0:h, 0:w]
            for _ in range(rng.integers(1, 4)):
                bw = int(w * rng.uniform(0.05, 0.16))
                cx0 = rng.uniform(bw, w - bw)
                cy0 = rng.uniform(bw, h - bw)
                blob = ((xx - cx0) / bw) ** 2 + ((yy - cy0) / (bw * rng.uniform(0.6, 1.2))) ** 2 <= 1.0
                img[blob] = int(rng.uniform(170, 255))
            if rng.uniform() < 0.7:
                bw = int(w * rng.uniform(0.4, 0.8))
                bh = int(h * rng.uniform(0.08, 0.2))
                x0 = int(rng.uniform(0, w - bw))
                y0 = int(rng.uniform(0, h - bh))
                _draw_text_block(img, rng, x0, y0, bw, bh, int(rng.uniform(35, 75)))
        elif rng.uniform() < 0.5:
            # Near-uniform dark screen: a faint strip below the noise floor.
            bh = max(int(h * rng.uniform(0.02, 0.06)), 2)
            y0 = int(rng.uniform(0, h - bh))
            img[y0 : y0 + bh, :] = min(int(img[0, 0]) + int(rng.uniform(2, 10)), 255)
    return img


class ScreenStream:
    """Screen playlist on the session clock: a new target every 400 ms with
    a 200 ms linear cross-dissolve. Targets are drawn lazily and cached."""

    def __init__(
        self,
        seed: int,
        dark_prob: float = 0.1,
        dims: tuple[int, int] = DEFAULT_RENDER_DIMS,
    ):
        self.seed = seed
        self.dark_prob = dark_prob
        self.dims = dims
        self._cache: dict[int, np.ndarray] = {}

    def _target_rng(self, idx: int) -> np.random.Generator:
        return _derive_rng(self.seed, _SCREENS, idx)

    def target_is_dark(self, idx: int) -> bool:
        """The design class drawn for target idx (before rendering)."""
        return bool(self._target_rng(idx).uniform() < self.dark_prob)

    def target(self, idx: int) -> np.ndarray:
        if idx not in self._cache:
            rng = self._target_rng(idx)
            dark = rng.uniform() < self.dark_prob
            self._cache[idx] = draw_screen(rng, dark, self.dims)
            if len(self._cache) > 4:
                self._cache.pop(min(k for k in self._cache if k != idx))
        return self._cache[idx]

    def frame_info(self, t_ms: int) -> tuple[np.ndarray, float, int, bool]:
        """Frame at t_ms: (image, dissolve_alpha, target_idx, is_blend).

        alpha is 0 at the switch instant (pure previous target) and ramps
        linearly to 1 over the dissolve window."""
        idx = t_ms // SCREEN_PERIOD_MS
        tau = t_ms % SCREEN_PERIOD_MS
        if idx == 0 or tau >= DISSOLVE_MS:
            return self.target(idx), 1.0, idx, False
        alpha = tau / DISSOLVE_MS
        if alpha == 0.0:
            return self.target(idx - 1), 0.0, idx - 1, False
        prev = self.target(idx - 1).astype(np.float32)
        cur = self.target(idx).astype(np.float32)
        img = np.clip(np.rint((1.0 - alpha) * prev + alpha * cur), 0, 255).astype(np.uint8)
        return img, alpha, idx, True


def brightness_class_of(screen: np.ndarray) -> str:
    gray = to_gray(screen)
    return "dark" if float(gray.mean()) < DARK_LUMA_THRESHOLD else "bright"


def gen_screen_stream(
    seed: int,
    duration_s: float,
    dark_prob: float = 0.1,
    dims: tuple[int, int] = DEFAULT_RENDER_DIMS,
    fps: int = 20,
) -> list[tuple[float, np.ndarray, str, float]]:
    """Materialized frame sequence: (t, frame, brightness_class, alpha)."""
    if duration_s <= 0:
        raise ValueError("duration_s must be positive")
    stream = ScreenStream(seed, dark_prob=dark_prob, dims=dims)
    out = []
    for k in range(int(round(duration_s * fps))):
        t_ms = round(k * 1000 / fps)
        img, alpha, _, _ = stream.frame_info(t_ms)
        out.append((t_ms / 1000.0, img, brightness_class_of(img), alpha))
    return out


# ---------------------------------------------------------------------------
# Eye geometry and rendering


def _lid_edge_y(cfg: SceneConfig, gaze_norm, xs: np.ndarray) -> np.ndarray:
    """Upper-eyelid edge height per column: a shallow parabola whose center
    depth follows eyelid_occlusion scaled linearly with downward gaze and
    attenuated for a bottom camera."""
    cx, cy = cfg.iris_center
    r = cfg.iris_radius
    gy = gaze_norm[1]
    c = cfg.eyelid_occlusion * max(gy, 0.0)
    if cfg.camera_position == "bottom":
        c *= BOTTOM_CAMERA_OCCLUSION_FACTOR
    y_center = (cy - r) + c * 2.0 * r
    sag = EYELID_SAG_FACTOR * r
    return y_center - sag * ((xs - cx) / (1.5 * r)) ** 2


def _lid_coverage(cfg: SceneConfig, gaze_norm, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Per-pixel lid coverage in [0, 1] with a 1 px anti-aliased edge.

    Shared by the renderer and the analytic occluded_fraction so the two
    always agree."""
    edge = _lid_edge_y(cfg, gaze_norm, xs)
    return np.clip(edge - ys + 0.5, 0.0, 1.0)


def reflection_geometry(gaze_norm: tuple[float, float], cfg: SceneConfig) -> ReflectionGeometry:
    """Reflection box and eyelid occlusion for a gaze point.

    Box dims follow the base scale (0.1 x iris width, plus jitter pixels)
    at the thumbnail aspect; the center offset is the ideal-vector identity
    ((gx-0.5)*w, (0.5-gy)*h)."""
    gx, gy = gaze_norm
    if not (0.0 <= gx <= 1.0 and 0.0 <= gy <= 1.0):
        raise ValueError(f"gaze_norm must lie in [0,1]^2, got {gaze_norm}")
    bw = max(int(round(cfg.reflection_base_scale * 2.0 * cfg.iris_radius + cfg.scale_jitter)), 2)
    bh = max(int(round(bw * THUMB_H / THUMB_W)), 1)
    dx = (gx - 0.5) * bw
    dy = (0.5 - gy) * bh
    cx, cy = cfg.iris_center
    x0 = int(round(cx + dx - bw / 2.0))
    y0 = int(round(cy + dy - bh / 2.0))
    box = Rect(x0, y0, bw, bh)

    bys, bxs = np.mgrid[y0 : y0 + bh, x0 : x0 + bw]
    coverage = _lid_coverage(cfg, gaze_norm, bxs.astype(np.float64), bys.astype(np.float64))
    return ReflectionGeometry((dx, dy), box, float(coverage.mean()))


def _texture_params(cfg: SceneConfig) -> dict:
    rng = _derive_rng(cfg.iris_texture_seed, _TEXTURE)
    return {
        "iris_luma": rng.uniform(55.0, 90.0),
        "pupil_frac": rng.uniform(0.32, 0.44),
        "streaks": [
            (rng.uniform(3.0, 6.0), int(rng.integers(11, 23)), rng.uniform(0, 2 * np.pi)),
            (rng.uniform(2.0, 4.0), int(rng.integers(27, 41)), rng.uniform(0, 2 * np.pi)),
        ],
        "skin_luma": rng.uniform(175.0, 205.0),
        "sclera_grad": rng.uniform(-8.0, 8.0),
    }


def render_eye(
    cfg: SceneConfig,
    gaze_norm: tuple[float, float],
    screen_frame: np.ndarray,
    seed: int = 0,
    prepped_screen: np.ndarray | None = None,
) -> tuple[np.ndarray, GazeTruth]:
    """Composite one eye frame: sclera, textured iris, pupil, the blurred
    screen content added at the reflection position, the upper-eyelid
    occluder, and Gaussian pixel noise. Returns the uint8 frame plus exact
    ground truth.

    prepped_screen optionally supplies the blurred grayscale screen (as
    produced internally) so dataset generation can reuse it across frames.
    """
    w, h = cfg.crop_dims
    tex = _texture_params(cfg)
    geom = reflection_geometry(gaze_norm, cfg)
    cx, cy = cfg.iris_center
    r = cfg.iris_radius

    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    d = np.hypot(xx - cx, yy - cy)

    canvas = np.full((h, w), cfg.sclera_luma, dtype=np.float64)
    canvas += tex["sclera_grad"] * (xx - w / 2.0) / w
    canvas -= 6.0 * (d / max(w, h)) ** 2

    # Iris/pupil texture only needs evaluating inside the iris bounding box.
    by0, by1 = max(int(cy - r) - 1, 0), min(int(cy + r) + 2, h)
    bx0, bx1 = max(int(cx - r) - 1, 0), min(int(cx + r) + 2, w)
    sl = (slice(by0, by1), slice(bx0, bx1))
    db = d[sl]
    theta = np.arctan2(yy[sl] - cy, xx[sl] - cx)
    iris_val = np.full_like(db, tex["iris_luma"])
    for amp, n, phase in tex["streaks"]:
        iris_val += amp * np.sin(n * theta + phase)
    iris_val -= 10.0 * np.clip(db / r, 0, 1) ** 2
    iris_alpha = np.clip(r - db + 0.5, 0.0, 1.0)
    canvas[sl] = canvas[sl] * (1 - iris_alpha) + iris_val * iris_alpha

    rp = tex["pupil_frac"] * r
    pupil_alpha = np.clip(rp - db + 0.5, 0.0, 1.0)
    canvas[sl] = canvas[sl] * (1 - pupil_alpha) + 16.0 * pupil_alpha

    # Specular screen reflection: blurred content scaled to the box and
    # added (a reflection contributes light; dark content vanishes).
    if prepped_screen is None:
        prepped_screen = prep_reflection_source(screen_frame)
    box = geom.box
    patch = resize(prepped_screen, box.w, box.h)
    ys0, xs0 = max(box.y, 0), max(box.x, 0)
    ys1, xs1 = min(box.y + box.h, h), min(box.x + box.w, w)
    if ys0 < ys1 and xs0 < xs1:
        canvas[ys0:ys1, xs0:xs1] += (
            cfg.reflection_gain * patch[ys0 - box.y : ys1 - box.y, xs0 - box.x : xs1 - box.x]
        )

    lid = _lid_coverage(cfg, gaze_norm, xx, yy)
    canvas = canvas * (1 - lid) + tex["skin_luma"] * lid

    if cfg.noise_sigma > 0:
        rng = np.random.default_rng(seed)
        canvas = canvas + rng.normal(0.0, cfg.noise_sigma, canvas.shape)
    eye = np.clip(np.rint(canvas), 0, 255).astype(np.uint8)

    sw, sh = cfg.screen_dims
    truth = GazeTruth(
        gaze_px=(gaze_norm[0] * sw, gaze_norm[1] * sh),
        gaze_norm=gaze_norm,
        iris=IrisCircle(cx, cy, r),
        reflection_box=box,
        eye_corners=cfg.eye_corners,
        occluded_fraction=geom.occluded_fraction,
        brightness_class=brightness_class_of(screen_frame),
    )
    return eye, truth


def prep_reflection_source(screen_frame: np.ndarray) -> np.ndarray:
    """Blurred grayscale screen used as the reflection source (float64).

    Blur sigma follows the thumbnail convention: 8.0 at the native
    1290-wide raster, proportional otherwise."""
    gray = to_gray(screen_frame).astype(np.float64)
    sigma = DEFAULT_BLUR_SIGMA * screen_frame.shape[1] / NATIVE_SCREEN_W
    return gaussian_blur(gray, sigma)


# ---------------------------------------------------------------------------
# Dataset generation


@dataclass
class _ParticipantDraw:
    iris_radius: float
    texture_seed: int
    eyelid_occlusion: float
    reflection_gain: float
    corners: np.ndarray  # (4,) normalized


def _draw_participant(seed: int, p: int) -> _ParticipantDraw:
    rng = _derive_rng(seed, _PARTICIPANT, p)
    corners = np.array(
        [
            rng.uniform(0.36, 0.44),
            rng.uniform(0.44, 0.52),
            rng.uniform(0.52, 0.60),
            rng.uniform(0.42, 0.50),
        ]
    )
    return _ParticipantDraw(
        iris_radius=float(rng.uniform(40.0, 60.0)),
        texture_seed=int(rng.integers(0, 2**31 - 1)),
        eyelid_occlusion=float(rng.uniform(0.1, 0.5)),
        reflection_gain=float(rng.uniform(0.7, 0.95)),
        corners=corners,
    )


def gen_dataset(
    out_dir,
    n_participants: int,
    sessions: int = 6,
    seed: int = 0,
    camera: str = "top",
    dark_prob: float = 0.1,
    noise_sigma: float = 3.0,
    fps: int = 20,
    screen_dims: tuple[int, int] = NATIVE_SCREEN_DIMS,
    screen_render_dims: tuple[int, int] = DEFAULT_RENDER_DIMS,
) -> Path:
    """Render a full synthetic corpus and write PNGs plus a manifest.

    Per participant: persistent eye parameters (iris radius, texture,
    eyelid occlusion). Per session: pose offsets and template-scale jitter.
    Warmup samples are not rendered. Screen PNGs are deduplicated (static
    frames are written once per target and shared across participants).
    Returns the manifest path.
    """
    if n_participants < 2:
        raise DataError("need at least 2 participants")
    if camera not in ("top", "bottom"):
        raise DataError(f"camera must be top|bottom, got {camera}")

    out_dir = Path(out_dir)
    (out_dir / "eyes").mkdir(parents=True, exist_ok=True)
    (out_dir / "screens").mkdir(parents=True, exist_ok=True)

    traj = gen_trajectory(screen_dims, fps=fps)
    participants = [_draw_participant(seed, p) for p in range(n_participants)]
    rows = []

    for s in range(sessions):
        stream = ScreenStream(_seed_of(seed, _SCREENS, s), dark_prob=dark_prob, dims=screen_render_dims)
        screen_paths: dict[tuple, str] = {}

        cfgs, shifts = [], []
        for p, draw in enumerate(participants):
            rng_s = _derive_rng(seed, _SESSION, p, s)
            center = (
                CROP_DIMS[0] / 2.0 + rng_s.uniform(-12.0, 12.0),
                CROP_DIMS[1] / 2.0 + rng_s.uniform(-10.0, 10.0),
            )
            cfgs.append(
                SceneConfig(
                    screen_dims=screen_dims,
                    iris_radius=draw.iris_radius,
                    iris_center=center,
                    iris_texture_seed=draw.texture_seed,
                    reflection_gain=draw.reflection_gain,
                    scale_jitter=float(rng_s.uniform(0.0, 6.0)),
                    eyelid_occlusion=draw.eyelid_occlusion,
                    camera_position=camera,
                    noise_sigma=noise_sigma,
                )
            )
            shifts.append(rng_s.uniform(-0.02, 0.02, size=4))

        # Frame-major so each screen is blurred once and reused by everyone.
        for k, sample in enumerate(traj):
            if sample.in_warmup:
                continue
            t_ms = round(k * 1000 / fps)
            frame, alpha, target_idx, is_blend = stream.frame_info(t_ms)
            skey = ("blend", s, k) if is_blend else ("target", s, target_idx)
            if skey not in screen_paths:
                name = (
                    f"screens/s{s}_f{k:05d}.png"
                    if is_blend
                    else f"screens/s{s}_t{target_idx:04d}.png"
                )
                write_png(out_dir / name, frame)
                screen_paths[skey] = name
            prepped = prep_reflection_source(frame)
            gaze_norm = (
                sample.gaze_px[0] / screen_dims[0],
                sample.gaze_px[1] / screen_dims[1],
            )

            for p, draw in enumerate(participants):
                cfg = cfgs[p]
                rng_f = _derive_rng(seed, _FRAME, p, s, k)
                corners = tuple(
                    np.clip(
                        draw.corners + shifts[p] + rng_f.normal(0.0, 0.0015, size=4),
                        0.0,
                        1.0,
                    )
                )
                cfg.eye_corners = corners
                eye, truth = render_eye(
                    cfg,
                    gaze_norm,
                    frame,
                    seed=int(rng_f.integers(0, 2**31 - 1)),
                    prepped_screen=prepped,
                )
                eye_name = f"eyes/p{p:02d}_s{s}_f{k:05d}.png"
                write_png(out_dir / eye_name, eye)

                init_cx = truth.iris.cx + float(np.clip(rng_f.normal(0.0, 2.5), -7, 7))
                init_cy = truth.iris.cy + float(np.clip(rng_f.normal(0.0, 2.5), -7, 7))
                init_w = truth.iris.diameter * float(1.0 + np.clip(rng_f.normal(0, 0.05), -0.12, 0.12))
                init_h = truth.iris.diameter * float(1.0 + np.clip(rng_f.normal(0, 0.05), -0.12, 0.12))

                box = truth.reflection_box
                rows.append(
                    {
                        "participant_id": p,
                        "session": s,
                        "camera": camera,
                        "t_s": sample.t,
                        "frame_png": eye_name,
                        "screen_png": screen_paths[skey],
                        "gaze_px": [truth.gaze_px[0], truth.gaze_px[1]],
                        "gaze_norm": [gaze_norm[0], gaze_norm[1]],
                        "eye_corners": list(corners),
                        "iris_gt": {"cx": truth.iris.cx, "cy": truth.iris.cy, "r": truth.iris.r},
                        "iris_init": {"cx": init_cx, "cy": init_cy, "w": init_w, "h": init_h},
                        "reflection_gt": {"x": box.x, "y": box.y, "w": box.w, "h": box.h},
                        "occluded_fraction": truth.occluded_fraction,
                        "brightness_class": truth.brightness_class,
                        "in_warmup": False,
                        "blink": False,
                    }
                )

    manifest = out_dir / "manifest.json"
    with open(manifest, "w") as f:
        json.dump(rows, f, indent=None, separators=(",", ":"))
    return manifest


def _seed_of(seed: int, *key: int) -> int:
    """Stable derived integer seed for nested generators."""
    return int(np.random.SeedSequence(seed, spawn_key=key).generate_state(1)[0])


def load_manifest(path) -> list[dict]:
    path = Path(path)
    try:
        with open(path) as f:
            rows = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise DataError(f"cannot read manifest {path}: {e}") from e
    if not isinstance(rows, list):
        raise DataError(f"{path}: manifest must be a JSON array of rows")
    return rows
