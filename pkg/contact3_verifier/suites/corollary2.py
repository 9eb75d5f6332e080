from typing import Any, Dict, List, Tuple

import numpy as np

from ..geometry.kernel import ricci_field
from ..geometry.triple_structure import sasaki_conditions
from .base import CURVATURE_TOLERANCE, EINSTEIN_VARIATION, SASAKI_THRESHOLD, VerificationSuite

KILLING_REF = "Corollary 2, \"Phi_1 = nabla xi_1, where nabla is the Levi-Civita connection\""
NORMALITY_REF = "Corollary 2, \"[Phi_alpha, Phi_alpha] + 2 d eta_alpha (x) xi_alpha = 0, for alpha = 2\""
EQUIVALENCE_REF = "Corollary 2, \"(equivalent) two conditions\""
EINSTEIN_REF = "Remark: Sasaki-Einstein, \"Scal_g = 2n(2n+1)\""

EINSTEIN_POINTS = 30


class Corollary2Suite(VerificationSuite):
    """Sasaki conditions on Q and the Einstein property of g_Q"""

    name = "corollary2"

    async def run(self) -> List[Dict[str, Any]]:
        self.logger.info(f"Running {self.name} on {self.model.name}")
        checks = []

        sasaki = await self._check_sasaki()
        checks.extend(sasaki)
        checks.extend(await self._check_equivalence(sasaki))
        checks.extend(await self._check_einstein())

        self.logger.info(f"Finished {self.name}: {len(checks)} checks")
        return checks

    async def _check_sasaki(self) -> List[Dict[str, Any]]:
        specs = [("sasaki_killing", KILLING_REF, SASAKI_THRESHOLD),
                 ("normality_phi2", NORMALITY_REF, SASAKI_THRESHOLD),
                 ("normality_phi3", NORMALITY_REF, SASAKI_THRESHOLD)]
        try:
            conditions = sasaki_conditions(self.geometry.triple, self.kappa)
            samples = self.bundle_samples()
            return [
                self.field_check("sasaki_killing", KILLING_REF, conditions.killing, samples, SASAKI_THRESHOLD),
                self.field_check("normality_phi2", NORMALITY_REF, conditions.normality[2], samples, SASAKI_THRESHOLD),
                self.field_check("normality_phi3", NORMALITY_REF, conditions.normality[3], samples, SASAKI_THRESHOLD),
            ]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_equivalence(self, sasaki: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
        """Both Sasaki conditions hold or both fail; residual 1 on disagreement"""
        by_name = {c["name"].split(".", 1)[1]: c for c in sasaki}
        first = by_name["sasaki_killing"]["pass"]
        second = by_name["normality_phi2"]["pass"] and by_name["normality_phi3"]["pass"]
        points = by_name["sasaki_killing"]["points"]
        return [self.record("conditions_agree", EQUIVALENCE_REF, points, 0.0 if first == second else 1.0, 0.5,
                            informational=True)]

    def _einstein_samples(self):
        """The first EINSTEIN_POINTS bundle samples, taken chart by chart"""
        budget = min(self.config.samples, EINSTEIN_POINTS)
        chosen, remaining = [], budget
        for s in self.geometry.bundle_samples(budget, self.config.seed):
            if remaining <= 0:
                break
            take = min(remaining, s.count)
            chosen.append((s.chart, s.coords[:take]))
            remaining -= take
        return chosen

    def _einstein_constants(self) -> Tuple[np.ndarray, float, np.ndarray]:
        """Per point: lambda = Scal / dim, the pointwise defect |Ric - lambda g| / |lambda| and Ric(xi1, xi1)"""
        triple = self.geometry.triple
        g_Q = triple.g_Q
        ricci = ricci_field(g_Q)
        xi1 = triple.xis[0]
        dim = g_Q.manifold.dim
        lambdas, defects, reeb = [], [], []
        for chart, coords in self._einstein_samples():
            metric = g_Q.batch(chart, coords)
            ric = ricci.batch(chart, coords)
            xi = xi1.batch(chart, coords)
            scalar = np.einsum("pij,pij->p", np.linalg.inv(metric), ric)
            lam = scalar / dim
            with np.errstate(divide="ignore", invalid="ignore"):
                defect = np.max(np.abs(ric - lam[:, None, None] * metric), axis=(1, 2)) / np.abs(lam)
            lambdas.append(lam)
            defects.append(defect)
            reeb.append(np.einsum("pi,pij,pj->p", xi, ric, xi) / np.einsum("pi,pij,pj->p", xi, metric, xi))
        return np.concatenate(lambdas), float(np.max(np.concatenate(defects))), np.concatenate(reeb)

    async def _check_einstein(self) -> List[Dict[str, Any]]:
        """Ric = lambda g_Q, then Scal and Ric(xi1, xi1) after scaling lambda to dim - 1"""
        specs = [("einstein_variation", EINSTEIN_REF, EINSTEIN_VARIATION),
                 ("normalized_scalar", EINSTEIN_REF, CURVATURE_TOLERANCE),
                 ("normalized_reeb_ricci", EINSTEIN_REF, CURVATURE_TOLERANCE)]
        try:
            dim = self.geometry.bundle.total.dim
            lambdas, pointwise, reeb = self._einstein_constants()
            points = lambdas.shape[0]
            mean = float(np.mean(lambdas))
            if mean == 0.0:
                spread = float("inf")
            else:
                spread = float(np.max(np.abs(lambdas - mean)) / abs(mean))
            # the homothety g -> (lambda / (dim - 1)) g normalizes the Einstein constant to dim - 1
            factor = (dim - 1) / mean if mean else float("nan")
            scalars = dim * lambdas * factor
            self.logger.info(f"Einstein constant of g_Q on {self.model.name}: {mean:.6f} (scale factor {factor:.6f})")
            return [
                self.record("einstein_variation", EINSTEIN_REF, points, max(spread, pointwise), EINSTEIN_VARIATION),
                self.record("normalized_scalar", EINSTEIN_REF, points, float(np.max(np.abs(scalars - dim * (dim - 1)))),
                            CURVATURE_TOLERANCE),
                self.record("normalized_reeb_ricci", EINSTEIN_REF, points,
                            float(np.max(np.abs(reeb * factor - (dim - 1)))), CURVATURE_TOLERANCE),
            ]
        except Exception as e:
            return self.failed(specs, e)
