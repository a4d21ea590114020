"""Per-variable text classifiers over composite labels.

Trains one small transformer classifier per signal variable on exported
{"text", "label"} JSON Lines, serves them over the /classify + /health
protocol, and hosts the classifier-head weight-merge experiment.
"""

from .errors import DegenerateLabels, IncompatibleEncoders, ModelServiceError
from .merge import MergedModel, merge_heads
from .model import EncoderConfig, SequenceClassifier, TextEncoder, TrainedModel
from .serve import serve
from .train import train

__version__ = "0.1.0"
