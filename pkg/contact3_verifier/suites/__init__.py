from typing import Dict, Type

from .base import VerificationSuite
from .corollary1 import Corollary1Suite
from .corollary2 import Corollary2Suite
from .corollary3 import Corollary3Suite
from .corollary4 import Corollary4Suite
from .kernel_selftest import KernelSelfTestSuite, fd_crosscheck
from .theorem1 import Theorem1Suite

SUITES: Dict[str, Type[VerificationSuite]] = {
    suite.name: suite
    for suite in (
        Theorem1Suite,
        Corollary1Suite,
        Corollary2Suite,
        Corollary3Suite,
        Corollary4Suite,
        KernelSelfTestSuite,
    )
}

__all__ = [
    "SUITES",
    "Corollary1Suite",
    "Corollary2Suite",
    "Corollary3Suite",
    "Corollary4Suite",
    "KernelSelfTestSuite",
    "Theorem1Suite",
    "VerificationSuite",
    "fd_crosscheck",
]
