"""score_adapter: transformer encoder fine-tuning with a regression head
for (comment -> integer score) data, emitting a predictions exchange file
for downstream residual analysis.

The model sees only comment text: group labels stay outside the feature
boundary, and training aborts if gendered pronouns survive in the input.
"""

from .config import DEFAULT_ENCODER, FRESH_TINY, FinetuneConfig
from .data import AdapterError, LabeledText, load_labeled_jsonl
from .emit import emit_predictions, validate_prediction_rows
from .finetune import TrainedModel, finetune, load_trained

__version__ = "0.1.0"
