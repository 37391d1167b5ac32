"""Screen-reflection-aware gaze estimation at desk scale.

Pipeline: refine the iris center from a noisy initial estimate, localize the
screen's corneal reflection by correlating the known screen content over the
inner iris, encode the reflection as heatmaps/vectors, and regress gaze with
a feature-fusion model. A deterministic synthetic renderer provides exact
ground truth for verification.
"""

from .imaging import Rect, crop, gaussian_blur, read_plane, read_png, resize, to_gray, write_plane, write_png
from .iris import (
    Contour,
    InitialIrisEstimate,
    IrisCircle,
    IrisFit,
    build_trimap,
    extract_contour,
    filter_eyelid_points,
    fit_circle_lsq,
    locate_iris,
    ransac_circle,
    segment_iris,
)
from .matching import (
    MatchResult,
    ReflectionVector,
    Thumbnail,
    crop_search_region,
    make_thumbnail,
    multiscale_match,
    ncc_heatmap,
    reflection_vector,
)
from .simulator import (
    GazeTruth,
    SceneConfig,
    TrajectorySample,
    gen_dataset,
    gen_screen_stream,
    gen_trajectory,
    reflection_geometry,
    render_eye,
)

__version__ = "0.1.0"


def __getattr__(name):
    # Heavier modules (model, features, harness) load lazily so the imaging
    # primitives stay cheap to import.
    if name in ("GazeRegressor", "FeatureArrays", "VariantSpec", "parse_variant"):
        from . import model

        return getattr(model, name)
    if name in ("FeatureTable", "extract_features", "load_features"):
        from . import features

        return getattr(features, name)
    if name in ("loocv_eval", "evaluate_variants", "error_metrics", "bench", "PX_PER_CM"):
        from . import harness

        return getattr(harness, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")

__all__ = [
    "Rect",
    "crop",
    "gaussian_blur",
    "resize",
    "to_gray",
    "read_png",
    "write_png",
    "read_plane",
    "write_plane",
    "Contour",
    "InitialIrisEstimate",
    "IrisCircle",
    "IrisFit",
    "build_trimap",
    "segment_iris",
    "extract_contour",
    "filter_eyelid_points",
    "ransac_circle",
    "fit_circle_lsq",
    "locate_iris",
    "Thumbnail",
    "MatchResult",
    "ReflectionVector",
    "make_thumbnail",
    "crop_search_region",
    "ncc_heatmap",
    "multiscale_match",
    "reflection_vector",
    "SceneConfig",
    "GazeTruth",
    "TrajectorySample",
    "gen_trajectory",
    "gen_screen_stream",
    "reflection_geometry",
    "render_eye",
    "gen_dataset",
]
