"""Chart-based verification of almost contact metric 3-structures built from complex contact manifolds."""
from .exceptions import ConfigurationError, GeometryError, IoFailure, VerifierError
from .models import CheckResult, Report, SuiteConfig
from .verifier import ContactVerifier

__version__ = "0.1.0"

__all__ = [
    "CheckResult",
    "ConfigurationError",
    "ContactVerifier",
    "GeometryError",
    "IoFailure",
    "Report",
    "SuiteConfig",
    "VerifierError",
]
