class ConfigurationError(ValueError):
    """Invalid deployment, episode or CLI configuration."""


class ConvergenceError(RuntimeError):
    """An iterative solver failed to reach its stopping criterion."""


class TrainingDivergedError(RuntimeError):
    """Forecaster training produced a non-finite loss."""
