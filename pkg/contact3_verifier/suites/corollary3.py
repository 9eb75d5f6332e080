import math
from typing import Any, Dict, List

import jax.numpy as jnp
import numpy as np

from ..geometry.circle_bundle import lift_form
from ..geometry.complex_contact import chern_connection
from ..geometry.kernel import exterior_derivative, field_map, min_topform_magnitude, standard_complex_structure
from ..geometry.triple_structure import contact_volume
from .base import COROLLARY3_THRESHOLD, NONVANISHING_FLOOR, VerificationSuite

CONTACT_REF = "Corollary 3: eta_1 is a contact form on Q"
CURVATURE_REF = "Corollary 3, \"d eta_1 = pi^* omega\""
POSITIVE_REF = "Corollary 3: omega is a positive (1,1)-form"
NORMALIZATION_REF = "Corollary 3, \"sqrt(-1)/2pi F_nabla = -omega/2pi\""
KAHLER_REF = "Corollary 3: omega is the Kahler form of g_Z"


class Corollary3Suite(VerificationSuite):
    """The Boothby-Wang picture: eta_1 contact with curvature a positive Kahler form"""

    name = "corollary3"

    async def run(self) -> List[Dict[str, Any]]:
        self.logger.info(f"Running {self.name} on {self.model.name}")
        checks = []

        checks.extend(await self._check_contact())
        checks.extend(await self._check_curvature())
        checks.extend(await self._check_positivity())

        self.logger.info(f"Finished {self.name}: {len(checks)} checks")
        return checks

    async def _check_contact(self) -> List[Dict[str, Any]]:
        specs = [("eta1_volume_min_magnitude", CONTACT_REF, NONVANISHING_FLOOR)]
        try:
            samples = self.bundle_samples()
            volume = contact_volume(self.geometry.eta1)
            points = sum(s.count for s in samples)
            return [self.record_lower_bound("eta1_volume_min_magnitude", CONTACT_REF, points,
                                            min_topform_magnitude(volume, samples))]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_curvature(self) -> List[Dict[str, Any]]:
        """d eta_1 against pi^* omega, and the Chern curvature of h against -omega"""
        specs = [("curvature_pullback", CURVATURE_REF, COROLLARY3_THRESHOLD),
                 ("curvature_normalization", NORMALIZATION_REF, COROLLARY3_THRESHOLD)]
        try:
            g = self.geometry
            d_eta = exterior_derivative(g.eta1)
            pulled = lift_form(g.bundle, g.curvature)
            difference = field_map(lambda d, w: d - w, d_eta, pulled, valence=(0, 2), name="d eta1 - pi^* omega")
            F = exterior_derivative(chern_connection(g.weight))
            normalized = field_map(lambda f, w: jnp.abs(1j * f / (2 * math.pi) + w / (2 * math.pi)), F, g.curvature,
                                   valence=(0, 2), name="sqrt(-1) F/2pi + omega/2pi")
            return [
                self.field_check("curvature_pullback", CURVATURE_REF, difference, self.bundle_samples(),
                                 COROLLARY3_THRESHOLD),
                self.field_check("curvature_normalization", NORMALIZATION_REF, normalized, self.base_samples(),
                                 COROLLARY3_THRESHOLD),
            ]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_positivity(self) -> List[Dict[str, Any]]:
        """omega(., J.) positive definite, and omega = g_Z(J., .)"""
        specs = [("omega_positive_min_eigenvalue", POSITIVE_REF, NONVANISHING_FLOOR),
                 ("kahler_normalization", KAHLER_REF, COROLLARY3_THRESHOLD)]
        try:
            g = self.geometry
            samples = self.base_samples()
            J = jnp.asarray(standard_complex_structure(g.atlas.m))
            gram = field_map(lambda w: 0.5 * (w @ J + (w @ J).T), g.curvature, valence=(0, 2), name="omega(., J.)")
            smallest, points = np.inf, 0
            for s in samples:
                eigenvalues = np.linalg.eigvalsh(gram.batch(s.chart, s.coords))
                smallest = min(smallest, float(np.min(eigenvalues)))
                points += s.count
            kahler = field_map(lambda w, m: w - J.T @ m, g.curvature, g.metric.g_Z, valence=(0, 2),
                               name="omega - g_Z(J., .)")
            return [
                self.record_lower_bound("omega_positive_min_eigenvalue", POSITIVE_REF, points, smallest),
                self.field_check("kahler_normalization", KAHLER_REF, kahler, samples, COROLLARY3_THRESHOLD),
            ]
        except Exception as e:
            return self.failed(specs, e)
