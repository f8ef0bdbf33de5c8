"""
Exception hierarchy shared by the se3grasp commands. The CLI maps
ConfigError to the usage exit code and every other Se3GraspError to a
runtime failure.
"""
from typing import Iterable, List
class Se3GraspError(Exception):
    """Base class for all package errors."""
class ConfigError(Se3GraspError):
    """Raised when a run configuration has one or more violations."""
    def __init__(self, violations: Iterable[str]):
        self.violations: List[str] = list(violations)
        super().__init__("; ".join(self.violations) or "invalid configuration")
class DatasetError(Se3GraspError):
    """Raised when a dataset file cannot be parsed or fails validation."""
class CheckpointError(Se3GraspError):
    """Raised when a checkpoint is malformed or does not match a model."""
class SamplingError(Se3GraspError):
    """Raised when a sampler meets a non-finite field."""
    def __init__(self, message: str, step: int, t: float):
        self.step = step
        self.t = t
        super().__init__(f"{message} (step={step}, t={t:.6g})")
class RegistrationError(Se3GraspError):
    """Raised when point clouds cannot be registered."""
class MissingInputError(Se3GraspError):
    """Raised when a file a command needs does not exist."""
