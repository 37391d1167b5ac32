"""Exception types raised across the pipeline."""


class HifigazeError(Exception):
    """Base class for all pipeline errors."""


class DataError(HifigazeError):
    """Bad input data (manifests, features, reports). CLI exit code 2."""


class EstimateOutOfFrame(HifigazeError):
    """Initial iris estimate center lies outside the eye crop."""


class DegenerateTrimap(HifigazeError):
    """Trimap has an empty definite-foreground or definite-background region."""


class EmptyMask(HifigazeError):
    """Segmentation mask contains no foreground pixels."""


class TooFewPoints(HifigazeError):
    """Circle estimation needs at least 3 points."""


class NoConsensus(HifigazeError):
    """RANSAC found no sample with a consensus set of 3 or more points."""


class CollinearPoints(HifigazeError):
    """All points are collinear; no circle fits."""


class ScreenTooSmall(HifigazeError):
    """Screen raster is smaller than the thumbnail it should produce."""


class TemplateTooLarge(HifigazeError):
    """Correlation template exceeds the search region."""


class MissingFeature(HifigazeError):
    """A feature required by the model variant is absent from the bundle."""


class EmptyDataset(DataError):
    """No training rows remain after exclusions."""


class TooFewParticipants(DataError):
    """Leave-one-participant-out evaluation needs at least 2 participants."""


class MissingClass(DataError):
    """Bright/dark split requested but one brightness class is absent."""


class LengthMismatch(DataError):
    """Prediction and truth arrays differ in length."""
