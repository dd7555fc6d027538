"""Loss-decrease-aware curriculum training for node classification."""

from ldts.errors import (
    ArgumentError,
    ConfigError,
    DatasetError,
    LdtsError,
    NumericError,
    ShapeError,
)
from ldts.pacing import PacingConfig, PacingKind, pacing_fraction, sample_count
from ldts.difficulty import (
    LossRecord,
    SelectionDistribution,
    easiest_by_absolute_loss,
    loss_decrease,
    to_probability,
)
from ldts.sampler import RngState, SampleSet, sample_without_replacement
from ldts.nn import ModelParams, forward, init_params, masked_backward, per_sample_loss, sgd_step
from ldts.data import Dataset, SynthConfig, aggregate_features, generate_synthetic, load_dataset, save_dataset
from ldts.trainer import EpochReport, Strategy, TrainConfig, evaluate, train

__version__ = "0.1.0"
