"""Quantum cloning and isotropic extendibility through diagram algebras."""
from .errors import CapExceeded, DimensionError, InfeasibleError, InputError, QcloneError, VerificationError

__version__ = "0.1.0"

__all__ = [
    "CapExceeded",
    "DimensionError",
    "InfeasibleError",
    "InputError",
    "QcloneError",
    "VerificationError",
    "__version__",
]
