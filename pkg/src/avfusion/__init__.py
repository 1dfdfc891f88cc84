"""Cross-attentional audio-visual fusion for valence/arousal regression.

The package provides the fused model and its ablations with hand-derived
gradients, the concordance correlation coefficient loss, an SGD trainer,
prediction post-processing, spectrogram feature extraction, and a synthetic
bimodal benchmark. See the README for the CLI and file formats.
"""

from .errors import ConfigError, DegenerateError, DomainError, FormatError, ShapeError
from .fusion import (
    FeatureSequence,
    FusionOutput,
    FusionParams,
    GradientBundle,
    HeadParams,
    SelfAttentionParams,
    TwoStageParams,
    VARIANTS,
    attended_features,
    attention_weights,
    concat_baseline_forward,
    cross_correlation,
    fusion_backward,
    fusion_forward,
    self_attention_forward,
    two_stage_forward,
)
from .metrics import CccStats, ccc, ccc_loss, ccc_loss_grad

__version__ = "0.1.0"
