import json
import math
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, validator

SUITE_ORDER = (
    "theorem1",
    "corollary1",
    "corollary2",
    "corollary3",
    "corollary4",
    "kernel-selftest",
)

REPORT_FORMATS = ("json", "html", "csv")

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")

NOT_EVALUATED = -1.0


class SuiteConfig(BaseModel):
    """Settings of one verification run"""

    model: str
    suites: List[str] = ["all"]
    samples: int = 100
    seed: int = 42
    tol_ad: float = 1e-8
    tol_fd: float = 1e-5
    out: Optional[str] = None
    format: str = "json"
    history_path: Optional[str] = None
    log_level: str = "INFO"

    class Config:
        extra = "forbid"

    @validator("samples")
    def _enough_samples(cls, value: int) -> int:
        if value < 10:
            raise ValueError("samples must be at least 10")
        return value

    @validator("tol_ad", "tol_fd")
    def _positive_tolerance(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("tolerances must be positive")
        return value

    @validator("format")
    def _known_format(cls, value: str) -> str:
        if value not in REPORT_FORMATS:
            raise ValueError(f"format must be one of {', '.join(REPORT_FORMATS)}")
        return value

    @validator("log_level")
    def _known_level(cls, value: str) -> str:
        value = value.upper()
        if value not in LOG_LEVELS:
            raise ValueError(f"log_level must be one of {', '.join(LOG_LEVELS)}")
        return value

    @validator("suites", pre=True)
    def _split_suites(cls, value: Any) -> List[str]:
        if isinstance(value, str):
            value = [part.strip() for part in value.split(",") if part.strip()]
        return [name.replace("_", "-") for name in value]

    def expanded_suites(self) -> List[str]:
        """Suite names in execution order, with `all` expanded"""
        if "all" in self.suites:
            return list(SUITE_ORDER)
        requested = set(self.suites)
        ordered = [name for name in SUITE_ORDER if name in requested]
        # unknown names are kept so the verifier can reject them by name
        return ordered + [name for name in self.suites if name not in SUITE_ORDER]


class CheckResult(BaseModel):
    name: str
    paper_ref: str
    points: int
    max_residual: float
    threshold: float
    passed: bool = Field(..., alias="pass")
    informational: bool = False

    class Config:
        allow_population_by_field_name = True

    @validator("max_residual")
    def _finite_or_marker(cls, value: float) -> float:
        if not math.isfinite(value):
            return NOT_EVALUATED
        return value

    @property
    def suite(self) -> str:
        return self.name.split(".", 1)[0]


class Report(BaseModel):
    model: str
    seed: int
    kappa: float
    checks: List[CheckResult] = []
    passed: bool = Field(True, alias="pass")

    class Config:
        allow_population_by_field_name = True

    @classmethod
    def assemble(cls, model: str, seed: int, kappa: float, checks: List[Dict[str, Any]]) -> "Report":
        """Build a report whose verdict is the conjunction of mandatory checks"""
        results = [c if isinstance(c, CheckResult) else CheckResult(**c) for c in checks]
        verdict = all(c.passed for c in results if not c.informational)
        return cls(model=model, seed=seed, kappa=kappa, checks=results, passed=verdict)

    def as_ordered_dict(self) -> Dict[str, Any]:
        return self.dict(by_alias=True)

    def to_json(self) -> str:
        return json.dumps(self.as_ordered_dict(), indent=2, ensure_ascii=False) + "\n"

    def failing(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed and not c.informational]
