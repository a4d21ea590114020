class ModelServiceError(Exception):
    """Base class for model-service errors."""


class DegenerateLabels(ModelServiceError):
    """Training data holds fewer than two distinct labels."""


class IncompatibleEncoders(ModelServiceError):
    """Models being merged do not share an encoder architecture."""
