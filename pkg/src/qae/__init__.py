"""Resource-bounded algorithmic entropy of quantum states.

A prefix-free machine over elementary quantum states is enumerated under a
budget; its outputs define a surrogate universal semi-density ``μ_t`` and
complexity operator ``κ = -log₂ μ_t``, from which the lower and upper
algorithmic entropies, universal randomness tests, cloning bounds and the
spherical-cap estimates behind the lower bound on Kq are computed.
"""

from .config import RunConfig, load_config
from .density import UniversalApprox, build_mu, h_lower, h_upper, kq_t
from .errors import (
    DomainError,
    IntegrityError,
    NumericError,
    ParseError,
    QAEError,
    ResourceError,
    ValidationError,
)
from .hermitian import HermitianOperator, Tolerances, loewner_leq, op_func, partial_trace, tensor
from .machine import EnumerationSnapshot, decode, enumerate_programs, semimeasure
from .suites import RunReport, run

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "EnumerationSnapshot",
    "HermitianOperator",
    "IntegrityError",
    "NumericError",
    "ParseError",
    "QAEError",
    "ResourceError",
    "RunConfig",
    "RunReport",
    "Tolerances",
    "UniversalApprox",
    "ValidationError",
    "build_mu",
    "decode",
    "enumerate_programs",
    "h_lower",
    "h_upper",
    "kq_t",
    "load_config",
    "loewner_leq",
    "op_func",
    "partial_trace",
    "run",
    "semimeasure",
    "tensor",
]
