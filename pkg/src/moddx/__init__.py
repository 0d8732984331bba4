"""Speech health diagnostics from modulation dynamics of temporal representations.

The pipeline: audio -> preprocessing and a log-mel encoder (or externally
supplied layered features via the WRX1 format) -> per-channel modulation
power dynamics -> attentive statistics pooling over time and modulation
frequency -> a fused health embedding and a binary diagnostic logit. The
package also ships the training engine (AdamW, linear schedule, early
stopping, waveform augmentation), evaluation metrics, interpretability
tools (group-contrast maps, sparsity, layer importance, a speaker-leakage
probe), a synthetic-corpus generator, and a command-line surface.
"""

from .analysis import (
    FRatioMap,
    SparsityReport,
    auc_roc,
    f1_macro,
    f_ratio_map,
    layer_importance,
    lda_predict,
    sparsity,
    speaker_probe,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig, load_config, parse_config, save_config
from .dsp import (
    PowerSpectrogram,
    StftConfig,
    Waveform,
    hamming_window,
    mel_filterbank,
    resample,
    stft_power,
)
from .dynamics import ModulationDynamics, mod_freq_axis, modulation_transform
from .encode import (
    LayeredTemporalRep,
    PreprocessConfig,
    encode_mel,
    load_wrx1,
    preprocess,
    read_wav,
    write_wav,
    write_wrx1,
)
from .errors import FormatError, TrainingError, UndefinedMetricError
from .manifest import DatasetManifest, ManifestRecord, parse_manifest, write_manifest
from .model import (
    Attention,
    HealthEmbedding,
    Linear,
    ModelParams,
    asp_time,
    backward,
    forward,
    forward_with_cache,
    init_params,
    layer_aggregate,
    make_prune_mask,
    pool_dynamics,
)
from .synth import SyntheticCorpusSpec, generate_synthetic
from .training import (
    AdamW,
    AugmentConfig,
    TrainConfig,
    TrainResult,
    augment,
    bce_loss,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AdamW",
    "Attention",
    "AugmentConfig",
    "DatasetManifest",
    "FRatioMap",
    "FormatError",
    "HealthEmbedding",
    "LayeredTemporalRep",
    "Linear",
    "ManifestRecord",
    "ModelParams",
    "ModulationDynamics",
    "PowerSpectrogram",
    "PreprocessConfig",
    "RunConfig",
    "SparsityReport",
    "StftConfig",
    "SyntheticCorpusSpec",
    "TrainConfig",
    "TrainResult",
    "TrainingError",
    "UndefinedMetricError",
    "Waveform",
    "asp_time",
    "auc_roc",
    "augment",
    "backward",
    "bce_loss",
    "encode_mel",
    "f1_macro",
    "f_ratio_map",
    "forward",
    "forward_with_cache",
    "generate_synthetic",
    "hamming_window",
    "init_params",
    "layer_aggregate",
    "layer_importance",
    "lda_predict",
    "load_checkpoint",
    "load_config",
    "load_wrx1",
    "make_prune_mask",
    "mel_filterbank",
    "mod_freq_axis",
    "modulation_transform",
    "parse_config",
    "parse_manifest",
    "pool_dynamics",
    "preprocess",
    "read_wav",
    "resample",
    "save_checkpoint",
    "save_config",
    "sparsity",
    "speaker_probe",
    "stft_power",
    "train",
    "write_manifest",
    "write_wav",
    "write_wrx1",
    "__version__",
]
