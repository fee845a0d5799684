"""Trainer exception hierarchy."""


class TrainerError(Exception):
    """Base class for trainer failures."""


class FormatError(TrainerError):
    """Malformed dataset or weights file."""


class ConfigurationError(TrainerError):
    """Invalid training configuration."""


class TrainingDivergedError(TrainerError):
    """Loss became non-finite during optimization."""
