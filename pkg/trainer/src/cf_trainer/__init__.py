"""cf_trainer: downstream CNN experiment over hazaug dataset variants.

Consumes the augmentation pipeline's JSON-Lines manifests and split files
verbatim, trains a small CNN mapping (frame image, ego speed) to forward
acceleration per dataset variant, and reports the method-by-subset RMSE/MAE
comparison grid.
"""

__version__ = "0.1.0"


class TrainerError(Exception):
    """Base class for trainer failures."""


class EmptyVariant(TrainerError):
    """The manifest holds no training records for the requested variant."""


class ShapeMismatch(TrainerError):
    """Inconsistent image or feature-vector shapes within a dataset."""


class MissingPrediction(TrainerError):
    """A frame required by the evaluation subset is absent from a CSV."""
