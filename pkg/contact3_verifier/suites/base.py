import logging
import math
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from ..geometry.kernel import ChartSample, TensorField, max_norm
from ..geometry.pipeline import ModelGeometry
from ..models import NOT_EVALUATED, SuiteConfig

THEOREM_THRESHOLD = 1e-7
TRANSITION_THRESHOLD = 1e-6
QUATERNION_THRESHOLD = 1e-10
SASAKI_THRESHOLD = 1e-5
EINSTEIN_VARIATION = 1e-4
CURVATURE_TOLERANCE = 0.05
COROLLARY3_THRESHOLD = 1e-6
COROLLARY4_THRESHOLD = 1e-7
TAUTOLOGICAL_THRESHOLD = 1e-8
METRIC_THRESHOLD = 1e-9
TAUT_SPREAD = 1e-6
NONVANISHING_FLOOR = 1e-12

CheckSpec = Tuple[str, str, float]


class VerificationSuite:
    """Base class for a group of residual checks on one model"""

    name = "suite"

    def __init__(self, geometry: ModelGeometry, config: SuiteConfig, kappa: float):
        self.geometry = geometry
        self.config = config
        self.kappa = kappa
        self.logger = logging.getLogger(__name__)

    async def run(self) -> List[Dict[str, Any]]:
        raise NotImplementedError

    @property
    def model(self):
        return self.geometry.model

    @property
    def multi_chart(self) -> bool:
        return bool(self.geometry.atlas.base.overlaps)

    def base_samples(self) -> List[ChartSample]:
        return self.geometry.base_samples(self.config.samples, self.config.seed)

    def bundle_samples(self) -> List[ChartSample]:
        return self.geometry.bundle_samples(self.config.samples, self.config.seed)

    def cone_samples(self) -> List[ChartSample]:
        return self.geometry.cone_samples(self.config.samples, self.config.seed)

    def overlap_count(self) -> int:
        return max(10, self.config.samples // 5)

    def record(self, check: str, paper_ref: str, points: int, residual: float, threshold: float,
               informational: bool = False) -> Dict[str, Any]:
        """A check passes when its max residual is at most the threshold"""
        name = f"{self.name}.{check}"
        residual = float(residual)
        finite = math.isfinite(residual)
        self.logger.debug(f"{name}: residual {residual:.3e} over {points} points (threshold {threshold:.1e})")
        return {
            "name": name,
            "paper_ref": paper_ref,
            "points": int(points) if finite else 0,
            "max_residual": residual if finite else NOT_EVALUATED,
            "threshold": float(threshold),
            "pass": finite and residual <= threshold,
            "informational": informational or self.model.is_informational(name),
        }

    def record_lower_bound(self, check: str, paper_ref: str, points: int, value: float,
                           floor: float = NONVANISHING_FLOOR) -> Dict[str, Any]:
        """A check whose measured minimum must exceed the floor"""
        entry = self.record(check, paper_ref, points, value, floor)
        entry["pass"] = math.isfinite(float(value)) and float(value) > floor
        return entry

    def field_check(self, check: str, paper_ref: str, field: TensorField, samples: Sequence[ChartSample],
                    threshold: float, informational: bool = False) -> Dict[str, Any]:
        points, residual = max_norm(field, samples)
        return self.record(check, paper_ref, points, residual, threshold, informational)

    def group_check(self, check: str, paper_ref: str, fields: Sequence[TensorField], samples: Sequence[ChartSample],
                    threshold: float, informational: bool = False) -> Dict[str, Any]:
        """One record for the worst of several residual fields, all evaluated on the same points"""
        counts, residuals = set(), []
        for field in fields:
            points, residual = max_norm(field, samples)
            counts.add(points)
            residuals.append(residual)
        if len(counts) > 1:
            raise ValueError(f"{self.name}.{check} fields were evaluated on different point counts {sorted(counts)}")
        points = counts.pop() if counts else 0
        worst = float(np.max(residuals)) if residuals else 0.0
        return self.record(check, paper_ref, points, worst, threshold, informational)

    def failed(self, specs: Sequence[CheckSpec], error: Exception) -> List[Dict[str, Any]]:
        self.logger.error(f"Error evaluating {self.name} checks {[s[0] for s in specs]}: {str(error)}")
        return [self.record(check, ref, 0, math.nan, threshold) for check, ref, threshold in specs]

    @staticmethod
    def relative_spread_per_point(values: np.ndarray) -> float:
        """values[point, variant]; worst (max - min) / max |.| across variants"""
        values = np.asarray(values)
        scale = np.max(np.abs(values), axis=1)
        spread = np.max(np.abs(values[:, :, None] - values[:, None, :]), axis=(1, 2))
        return float(np.max(spread / np.where(scale > 0, scale, 1.0)))
