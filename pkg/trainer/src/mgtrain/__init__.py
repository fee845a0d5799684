"""Training side of the window super-resolution prolongation operator."""

from .errors import (
    ConfigurationError,
    FormatError,
    TrainerError,
    TrainingDivergedError,
)
from .formats import (
    WeightsArchive,
    WindowPair,
    read_mgds,
    read_srwt,
    write_mgds,
    write_srwt,
)
from .model import GENERATOR_ARCHITECTURE, Discriminator, Generator
from .train import (
    TrainConfig,
    evaluate_operator,
    fit_stencil_baseline,
    report_to_csv,
    spline_upsample_window,
    split_dataset,
    train_generator,
)

__all__ = [
    "ConfigurationError",
    "FormatError",
    "TrainerError",
    "TrainingDivergedError",
    "WeightsArchive",
    "WindowPair",
    "read_mgds",
    "read_srwt",
    "write_mgds",
    "write_srwt",
    "GENERATOR_ARCHITECTURE",
    "Discriminator",
    "Generator",
    "TrainConfig",
    "evaluate_operator",
    "fit_stencil_baseline",
    "report_to_csv",
    "spline_upsample_window",
    "split_dataset",
    "train_generator",
]
