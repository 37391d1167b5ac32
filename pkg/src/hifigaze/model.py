"""Feature-fusion gaze regressor.

Encoders per input: eye bounds through a small MLP (4->32->16), each active
image plane through conv(3x3, 8ch, stride 2) -> conv(3x3, 16ch, stride 2) ->
dense to 256 (the eye-crop and heatmap encoders are weight-shared across the
left/right eyes), and the reflection vector concatenated directly with masked
slots zeroed. A fusion MLP (128 -> 64 -> 2) predicts normalized screen
coordinates, scaled to pixels at the output.

Everything is plain numpy with handwritten gradients (verified against
finite differences) and a bias-corrected Adam update. Training is
single-threaded and bit-deterministic for a given (data, seed).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .errors import DataError, EmptyDataset, MissingFeature

CROP_SHAPE = (32, 64)  # (H, W) of the downscaled grayscale eye-crop planes
THUMB_SHAPE = (101, 50)
HEATMAP_SHAPE = (55, 40)

VARIANTS = (
    "eb",
    "eb+ec",
    "eb+th",
    "eb+hm",
    "eb+rv",
    "eb+ec+th",
    "eb+ec+rv",
    "eb+ec+hm+rv",
)

MODEL_FORMAT = "hifigaze-model-1"

LOSS_EPS = 1e-12  # smooths the Euclidean norm at zero error


@dataclass(frozen=True)
class VariantSpec:
    """Which feature groups feed the model; eye bounds are always active."""

    use_crops: bool = False
    use_thumbnail: bool = False
    use_heatmap: bool = False
    use_vector: bool = False

    @property
    def name(self) -> str:
        parts = ["eb"]
        if self.use_crops:
            parts.append("ec")
        if self.use_thumbnail:
            parts.append("th")
        if self.use_heatmap:
            parts.append("hm")
        if self.use_vector:
            parts.append("rv")
        return "+".join(parts)

    @property
    def vector_only(self) -> bool:
        """Vector is the only measurement input: such models are trained and
        evaluated only on frames where both eyes have an unmasked vector."""
        return self.use_vector and not (self.use_crops or self.use_thumbnail or self.use_heatmap)


def parse_variant(name: str) -> VariantSpec:
    parts = name.split("+")
    known = {"eb", "ec", "th", "hm", "rv"}
    if parts[0] != "eb" or not set(parts) <= known or len(set(parts)) != len(parts):
        raise DataError(f"unknown variant {name!r}; expected one of {', '.join(VARIANTS)}")
    return VariantSpec(
        use_crops="ec" in parts,
        use_thumbnail="th" in parts,
        use_heatmap="hm" in parts,
        use_vector="rv" in parts,
    )


@dataclass
class FeatureArrays:
    """Column-oriented feature storage for N frames.

    bounds (N,4) and, per variant: crops (N,2,32,64), thumbs (N,101,50),
    heatmaps (N,2,55,40), vectors (N,4) with vector_masks (N,2). Plane
    arrays may be uint8 (scaled to [0,1] at batch time) or float32.
    """

    bounds: np.ndarray
    vectors: np.ndarray | None = None
    vector_masks: np.ndarray | None = None
    crops: np.ndarray | None = None
    thumbs: np.ndarray | None = None
    heatmaps: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.bounds)

    def take(self, idx) -> "FeatureArrays":
        pick = lambda a: None if a is None else a[idx]
        return FeatureArrays(
            bounds=self.bounds[idx],
            vectors=pick(self.vectors),
            vector_masks=pick(self.vector_masks),
            crops=pick(self.crops),
            thumbs=pick(self.thumbs),
            heatmaps=pick(self.heatmaps),
        )


def _as_features(X) -> FeatureArrays:
    if isinstance(X, FeatureArrays):
        return X
    if isinstance(X, dict):
        return FeatureArrays(**X)
    raise DataError("X must be a FeatureArrays or a dict of its fields")


def _check_plane_field(a, shape, name, n, pair):
    want = (n, 2) + shape if pair else (n,) + shape
    if a is None:
        raise MissingFeature(f"variant requires {name}")
    if a.shape != want:
        raise ValueError(f"{name} must have shape {want}, got {a.shape}")


def validate_features(X, variant: VariantSpec) -> FeatureArrays:
    """Check presence and exact dims of every field the variant consumes."""
    X = _as_features(X)
    n = len(X)
    bounds = np.asarray(X.bounds)
    if bounds.shape != (n, 4):
        raise ValueError(f"bounds must be (N, 4), got {bounds.shape}")
    if variant.use_crops:
        _check_plane_field(X.crops, CROP_SHAPE, "crops", n, pair=True)
    if variant.use_thumbnail:
        _check_plane_field(X.thumbs, THUMB_SHAPE, "thumbs", n, pair=False)
    if variant.use_heatmap:
        _check_plane_field(X.heatmaps, HEATMAP_SHAPE, "heatmaps", n, pair=True)
    if variant.use_vector:
        if X.vectors is None or X.vector_masks is None:
            raise MissingFeature("variant requires vectors and vector_masks")
        if X.vectors.shape != (n, 4) or X.vector_masks.shape != (n, 2):
            raise ValueError("vectors must be (N, 4) and vector_masks (N, 2)")
    return X


# ---------------------------------------------------------------------------
# Layers


def _plane_batch(a, idx, dtype):
    """Slice a plane array and scale uint8 storage to [0, 1]."""
    x = a[idx]
    if x.dtype == np.uint8:
        return x.astype(dtype) / dtype(255.0)
    return x.astype(dtype, copy=False)


def _conv_fwd(x, w, b):
    """3x3 stride-2 pad-1 conv in NHWC layout.

    x: (B, H, W, C); w: (3, 3, C, O). The nine kernel shifts are gathered
    into one (B*OH*OW, 9C) patch matrix (cheap in NHWC: each shift is a
    contiguous-chunk strided copy) and applied as a single GEMM. Returns
    the pre-activation (B, OH, OW, O) and the patch matrix for backward."""
    bsz, h, width, c = x.shape
    o = w.shape[3]
    oh, ow = (h + 1) // 2, (width + 1) // 2
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    cols = np.empty((bsz, oh, ow, 9 * c), dtype=x.dtype)
    for ky in range(3):
        for kx in range(3):
            j = 3 * ky + kx
            cols[..., j * c : (j + 1) * c] = xp[
                :, ky : ky + 2 * oh - 1 : 2, kx : kx + 2 * ow - 1 : 2, :
            ]
    cols = cols.reshape(-1, 9 * c)
    y = cols @ w.reshape(9 * c, o)
    y += b
    return y.reshape(bsz, oh, ow, o), cols


def _conv_bwd(dy, cols, w, x_shape, grads, w_name, b_name, need_dx):
    """Gradients of the im2col conv. dy: (B, OH, OW, O) pre-activation
    grads. Accumulates dW/db into grads; returns dx or None."""
    bsz, h, width, c = x_shape
    o = w.shape[3]
    oh, ow = dy.shape[1], dy.shape[2]
    dy_flat = dy.reshape(-1, o)
    _accum(grads, w_name, (cols.T @ dy_flat).reshape(w.shape))
    _accum(grads, b_name, dy_flat.sum(axis=0))
    if not need_dx:
        return None
    dcols = (dy_flat @ w.reshape(9 * c, o).T).reshape(bsz, oh, ow, 9 * c)
    dxp = np.zeros((bsz, h + 2, width + 2, c), dtype=dy.dtype)
    for ky in range(3):
        for kx in range(3):
            j = 3 * ky + kx
            dxp[:, ky : ky + 2 * oh - 1 : 2, kx : kx + 2 * ow - 1 : 2, :] += dcols[
                ..., j * c : (j + 1) * c
            ]
    return dxp[:, 1 : h + 1, 1 : width + 1, :]


class _PlaneEncoderCache:
    __slots__ = ("x_shape", "cols1", "a1", "cols2", "a2", "flat")


def _encode_plane_fwd(params, prefix, x):
    """conv-relu-conv-relu-flatten-dense(256). x: (B, H, W) single plane."""
    c = _PlaneEncoderCache()
    x = x[..., np.newaxis]  # NHWC with C=1
    c.x_shape = x.shape
    z1, c.cols1 = _conv_fwd(x, params[prefix + "_w1"], params[prefix + "_b1"])
    c.a1 = np.maximum(z1, 0)
    z2, c.cols2 = _conv_fwd(c.a1, params[prefix + "_w2"], params[prefix + "_b2"])
    c.a2 = np.maximum(z2, 0)
    c.flat = c.a2.reshape(len(x), -1)  # NHWC flatten is a free reshape
    return c.flat @ params[prefix + "_fc"] + params[prefix + "_fcb"], c


def _encode_plane_bwd(params, prefix, cache, dy, grads):
    """Backprop through a plane encoder; gradients w.r.t. the input plane
    are not needed (planes are data, not parameters)."""
    c = cache
    _accum(grads, prefix + "_fc", c.flat.T @ dy)
    _accum(grads, prefix + "_fcb", dy.sum(axis=0))
    dflat = dy @ params[prefix + "_fc"].T
    dz2 = dflat.reshape(c.a2.shape)
    dz2 = dz2 * (c.a2 > 0)
    da1 = _conv_bwd(dz2, c.shifts2, params[prefix + "_w2"], c.a1.shape, grads,
                    prefix + "_w2", prefix + "_b2", need_dx=True)
    dz1 = da1 * (c.a1 > 0)
    _conv_bwd(dz1, c.shifts1, params[prefix + "_w1"], c.x_shape, grads,
              prefix + "_w1", prefix + "_b1", need_dx=False)


def _accum(grads, name, g):
    if name in grads:
        grads[name] += g
    else:
        grads[name] = g


# ---------------------------------------------------------------------------
# Parameter construction


def _plane_encoder_shapes(prefix, in_shape):
    h, w = in_shape
    h2, w2 = (((h + 1) // 2) + 1) // 2, (((w + 1) // 2) + 1) // 2
    flat = 16 * h2 * w2
    return [
        (prefix + "_w1", (3, 3, 1, 8)),
        (prefix + "_b1", (8,)),
        (prefix + "_w2", (3, 3, 8, 16)),
        (prefix + "_b2", (16,)),
        (prefix + "_fc", (flat, 256)),
        (prefix + "_fcb", (256,)),
    ]


def embedding_dim(variant: VariantSpec) -> int:
    d = 16
    if variant.use_crops:
        d += 512  # two eyes x 256
    if variant.use_thumbnail:
        d += 256
    if variant.use_heatmap:
        d += 512
    if variant.use_vector:
        d += 4
    return d


def _param_shapes(variant: VariantSpec) -> list[tuple[str, tuple]]:
    shapes = [
        ("eb_w1", (4, 32)),
        ("eb_b1", (32,)),
        ("eb_w2", (32, 16)),
        ("eb_b2", (16,)),
    ]
    if variant.use_crops:
        shapes += _plane_encoder_shapes("ec", CROP_SHAPE)
    if variant.use_thumbnail:
        shapes += _plane_encoder_shapes("th", THUMB_SHAPE)
    if variant.use_heatmap:
        shapes += _plane_encoder_shapes("hm", HEATMAP_SHAPE)
    d = embedding_dim(variant)
    shapes += [
        ("head_w1", (d, 128)),
        ("head_b1", (128,)),
        ("head_w2", (128, 64)),
        ("head_b2", (64,)),
        ("head_w3", (64, 2)),
        ("head_b3", (2,)),
    ]
    return shapes


def init_params(variant: VariantSpec, seed: int, dtype=np.float32) -> dict[str, np.ndarray]:
    """He-initialized weights, zero biases; deterministic for a seed."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
    params = {}
    for name, shape in _param_shapes(variant):
        if len(shape) == 1:  # biases
            params[name] = np.zeros(shape, dtype=dtype)
        else:
            fan_in = int(np.prod(shape[:-1]))
            params[name] = (rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)).astype(dtype)
    return params


# ---------------------------------------------------------------------------
# Forward / backward


def euclidean_loss(pred, truth, eps: float = LOSS_EPS):
    """Batch-averaged Euclidean distance in pixels."""
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    d = pred - truth
    return float(np.mean(np.sqrt((d * d).sum(axis=1) + eps)))


def adam_step(params, grads, state, t, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """Standard bias-corrected Adam update, in place on params.

    state holds (first moment, second moment, scratch) keyed like params;
    t is 1-based. Bias correction is folded into the step size
    (lr*sqrt(1-b2^t)/(1-b1^t), eps scaled to match), which is algebraically
    the textbook m_hat/(sqrt(v_hat)+eps) update without the temporaries.
    Consumes grads as scratch space.
    """
    if t < 1:
        raise ValueError("Adam timestep t must be >= 1")
    b1c = 1.0 - beta1**t
    b2c = 1.0 - beta2**t
    lr_t = lr * np.sqrt(b2c) / b1c
    eps_t = eps * np.sqrt(b2c)
    for name, g in grads.items():
        m, v, scratch = state[name]
        np.multiply(g, g, out=scratch)
        v *= beta2
        scratch *= 1.0 - beta2
        v += scratch
        m *= beta1
        g *= 1.0 - beta1
        m += g
        np.sqrt(v, out=scratch)
        scratch += eps_t
        np.divide(m, scratch, out=scratch)
        scratch *= lr_t
        params[name] -= scratch


def make_adam_state(params) -> dict:
    return {
        k: (np.zeros_like(p), np.zeros_like(p), np.empty_like(p))
        for k, p in params.items()
    }


class _ForwardCache:
    __slots__ = ("bounds_x", "eb_a1", "eb_a2", "planes", "emb", "h_a1", "h_a2", "u")


def _forward(params, batch, variant: VariantSpec, screen_scale, dtype):
    """Full forward pass. batch is a dict of dtype arrays; returns
    (pred_px (B,2), cache)."""
    c = _ForwardCache()
    c.planes = {}
    c.bounds_x = batch["bounds"]
    z = c.bounds_x @ params["eb_w1"] + params["eb_b1"]
    c.eb_a1 = np.maximum(z, 0)
    z = c.eb_a1 @ params["eb_w2"] + params["eb_b2"]
    c.eb_a2 = np.maximum(z, 0)
    parts = [c.eb_a2]

    if variant.use_crops:
        for side in (0, 1):
            e, cache = _encode_plane_fwd(params, "ec", batch["crops"][:, side])
            c.planes[("ec", side)] = cache
            parts.append(e)
    if variant.use_thumbnail:
        e, cache = _encode_plane_fwd(params, "th", batch["thumbs"])
        c.planes[("th", 0)] = cache
        parts.append(e)
    if variant.use_heatmap:
        for side in (0, 1):
            e, cache = _encode_plane_fwd(params, "hm", batch["heatmaps"][:, side])
            c.planes[("hm", side)] = cache
            parts.append(e)
    if variant.use_vector:
        parts.append(batch["vectors"])

    c.emb = np.concatenate(parts, axis=1)
    z = c.emb @ params["head_w1"] + params["head_b1"]
    c.h_a1 = np.maximum(z, 0)
    z = c.h_a1 @ params["head_w2"] + params["head_b2"]
    c.h_a2 = np.maximum(z, 0)
    c.u = c.h_a2 @ params["head_w3"] + params["head_b3"]
    return c.u * screen_scale, c


def _backward(params, c, batch, variant: VariantSpec, dpred, screen_scale):
    """Gradients of the loss w.r.t. every parameter, given dL/dpred_px."""
    grads = {}
    du = dpred * screen_scale
    _accum(grads, "head_w3", c.h_a2.T @ du)
    _accum(grads, "head_b3", du.sum(axis=0))
    da2 = du @ params["head_w3"].T
    dz2 = da2 * (c.h_a2 > 0)
    _accum(grads, "head_w2", c.h_a1.T @ dz2)
    _accum(grads, "head_b2", dz2.sum(axis=0))
    da1 = dz2 @ params["head_w2"].T
    dz1 = da1 * (c.h_a1 > 0)
    _accum(grads, "head_w1", c.emb.T @ dz1)
    _accum(grads, "head_b1", dz1.sum(axis=0))
    demb = dz1 @ params["head_w1"].T

    offset = 16
    deb = demb[:, :offset]
    if variant.use_crops:
        for side in (0, 1):
            _encode_plane_bwd(params, "ec", c.planes[("ec", side)], demb[:, offset : offset + 256], grads)
            offset += 256
    if variant.use_thumbnail:
        _encode_plane_bwd(params, "th", c.planes[("th", 0)], demb[:, offset : offset + 256], grads)
        offset += 256
    if variant.use_heatmap:
        for side in (0, 1):
            _encode_plane_bwd(params, "hm", c.planes[("hm", side)], demb[:, offset : offset + 256], grads)
            offset += 256
    # Vector slots are raw inputs: nothing to accumulate.

    dz = deb * (c.eb_a2 > 0)
    _accum(grads, "eb_w2", c.eb_a1.T @ dz)
    _accum(grads, "eb_b2", dz.sum(axis=0))
    da = dz @ params["eb_w2"].T
    dz = da * (c.eb_a1 > 0)
    _accum(grads, "eb_w1", c.bounds_x.T @ dz)
    _accum(grads, "eb_b1", dz.sum(axis=0))
    return grads


# ---------------------------------------------------------------------------
# Estimator


class GazeRegressor(BaseEstimator, RegressorMixin):
    """Gaze regressor over extracted feature bundles.

    Follows the standard protocol: Adam (lr 3e-5, betas 0.9/0.999), batch
    size 64, 20 epochs, Euclidean loss in screen pixels, seeded shuffling.
    Fitting is deterministic: same data and seed give bit-identical weights.
    """

    def __init__(
        self,
        variant: str = "eb",
        epochs: int = 20,
        batch_size: int = 64,
        learning_rate: float = 3e-5,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        seed: int = 0,
        screen_dims: tuple[int, int] = (1290, 2796),
        dtype: str = "float32",
    ):
        self.variant = variant
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.seed = seed
        self.screen_dims = screen_dims
        self.dtype = dtype

    # -- internals ---------------------------------------------------------

    def _spec(self) -> VariantSpec:
        return parse_variant(self.variant)

    def _np_dtype(self):
        return np.dtype(self.dtype).type

    def _scale(self, dtype):
        return np.asarray(self.screen_dims, dtype=dtype)

    def _batch(self, X: FeatureArrays, idx, dtype):
        spec = self._spec()
        batch = {"bounds": X.bounds[idx].astype(dtype, copy=False)}
        if spec.use_crops:
            batch["crops"] = _plane_batch(X.crops, idx, dtype)
        if spec.use_thumbnail:
            batch["thumbs"] = _plane_batch(X.thumbs, idx, dtype)
        if spec.use_heatmap:
            batch["heatmaps"] = _plane_batch(X.heatmaps, idx, dtype)
        if spec.use_vector:
            v = X.vectors[idx].astype(dtype, copy=True)
            masks = X.vector_masks[idx]
            v[:, 0:2][masks[:, 0]] = 0
            v[:, 2:4][masks[:, 1]] = 0
            batch["vectors"] = v
        return batch

    # -- spec surface ------------------------------------------------------

    def encode(self, X) -> np.ndarray:
        """Concatenated feature embedding for each frame, (N, D)."""
        spec = self._spec()
        X = validate_features(X, spec)
        params = self._params()
        dtype = self._np_dtype()
        out = []
        for lo in range(0, len(X), 512):
            idx = np.arange(lo, min(lo + 512, len(X)))
            batch = self._batch(X, idx, dtype)
            _, cache = _forward(params, batch, spec, self._scale(dtype), dtype)
            out.append(cache.emb)
        return np.concatenate(out, axis=0)

    def _params(self):
        if not hasattr(self, "params_"):
            raise DataError("model is not fitted; call fit() or load()")
        return self.params_

    def loss_and_grads(self, X, y):
        """Mean Euclidean loss over (X, y) plus exact parameter gradients.

        The finite-difference oracle in the test suite differentiates this
        function numerically.
        """
        spec = self._spec()
        X = validate_features(X, spec)
        y = np.asarray(y, dtype=np.float64)
        dtype = self._np_dtype()
        params = self._params()
        idx = np.arange(len(X))
        batch = self._batch(X, idx, dtype)
        pred, cache = _forward(params, batch, spec, self._scale(dtype), dtype)
        diff = pred.astype(np.float64) - y
        dist = np.sqrt((diff * diff).sum(axis=1) + LOSS_EPS)
        loss = float(dist.mean())
        dpred = (diff / dist[:, np.newaxis] / len(y)).astype(dtype)
        grads = _backward(params, cache, batch, spec, dpred, self._scale(dtype))
        return loss, grads

    def fit(self, X, y):
        spec = self._spec()
        X = validate_features(X, spec)
        y = np.asarray(y, dtype=np.float64)
        if len(X) == 0:
            raise EmptyDataset("no training rows")
        if y.shape != (len(X), 2):
            raise ValueError(f"y must be (N, 2), got {y.shape}")

        dtype = self._np_dtype()
        self.params_ = init_params(spec, self.seed, dtype)
        state = make_adam_state(self.params_)
        scale = self._scale(dtype)
        n = len(X)
        t = 0
        self.history_ = []
        for epoch in range(self.epochs):
            rng = np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(1, epoch)))
            order = rng.permutation(n)
            total, seen = 0.0, 0
            for lo in range(0, n, self.batch_size):
                idx = order[lo : lo + self.batch_size]
                batch = self._batch(X, idx, dtype)
                pred, cache = _forward(self.params_, batch, spec, scale, dtype)
                diff = pred.astype(np.float64) - y[idx]
                dist = np.sqrt((diff * diff).sum(axis=1) + LOSS_EPS)
                total += float(dist.sum())
                seen += len(idx)
                dpred = (diff / dist[:, np.newaxis] / len(idx)).astype(dtype)
                grads = _backward(self.params_, cache, batch, spec, dpred, scale)
                t += 1
                adam_step(
                    self.params_, grads, state, t,
                    self.learning_rate, self.beta1, self.beta2, self.eps,
                )
            self.history_.append(total / seen)
        self.n_steps_ = t
        return self

    def predict(self, X) -> np.ndarray:
        """Gaze prediction in screen pixels, (N, 2)."""
        spec = self._spec()
        X = validate_features(X, spec)
        params = self._params()
        dtype = self._np_dtype()
        preds = []
        for lo in range(0, len(X), 512):
            idx = np.arange(lo, min(lo + 512, len(X)))
            batch = self._batch(X, idx, dtype)
            pred, _ = _forward(params, batch, spec, self._scale(dtype), dtype)
            preds.append(pred.astype(np.float64))
        return np.concatenate(preds, axis=0)

    # -- serialization -----------------------------------------------------

    def save(self, path) -> None:
        """JSON header plus raw float32 little-endian tensor blobs."""
        params = self._params()
        names = [name for name, _ in _param_shapes(self._spec())]
        header = {
            "format": MODEL_FORMAT,
            "variant": self.variant,
            "seed": self.seed,
            "screen_dims": list(self.screen_dims),
            "tensors": [[n, list(params[n].shape)] for n in names],
        }
        with open(path, "wb") as f:
            f.write(json.dumps(header, sort_keys=True).encode() + b"\n")
            for n in names:
                f.write(np.ascontiguousarray(params[n], dtype="<f4").tobytes())

    @classmethod
    def load(cls, path) -> "GazeRegressor":
        with open(path, "rb") as f:
            header_line = f.readline()
            blob = f.read()
        try:
            header = json.loads(header_line)
        except json.JSONDecodeError as e:
            raise DataError(f"{path}: bad model header: {e}") from e
        if header.get("format") != MODEL_FORMAT:
            raise DataError(f"{path}: unknown model format {header.get('format')!r}")
        model = cls(
            variant=header["variant"],
            seed=header["seed"],
            screen_dims=tuple(header["screen_dims"]),
        )
        params = {}
        offset = 0
        for name, shape in header["tensors"]:
            size = int(np.prod(shape)) if shape else 1
            arr = np.frombuffer(blob, dtype="<f4", count=size, offset=offset)
            params[name] = arr.reshape(shape).astype(np.float32)
            offset += size * 4
        if offset != len(blob):
            raise DataError(f"{path}: trailing or missing tensor bytes")
        model.params_ = params
        model.history_ = []
        return model
