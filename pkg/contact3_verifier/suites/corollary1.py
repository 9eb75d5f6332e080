import itertools
from typing import Any, Dict, List

import jax.numpy as jnp
import numpy as np

from ..geometry.kernel import exterior_derivative, field_map
from ..geometry.triple_structure import (
    almost_contact_defects,
    contact_volume,
    metric_defects,
    sphere_family,
    taut_volume,
)
from .base import NONVANISHING_FLOOR, TAUT_SPREAD, THEOREM_THRESHOLD, VerificationSuite

SPHERE_REF = "Corollary 1, \"Phi_s = a Phi_1 + b Phi_2 + c Phi_3\""
TAUT_REF = "Corollary 1, \"eta_s ^ (nu_s)^{2n+1} = eta_{s'} ^ (nu_{s'})^{2n+1} != 0\""
NU_REF = "Corollary 1, \"nu_s := g_Q(Phi_s (x) Id)\""
CIRCLE_REF = "Theorem 1 (2): (eta_2, eta_3) is a taut contact circle"
ROUND_REF = "Corollary 1 footnote, \"eta_alpha(xi_beta) + eta_beta(xi_alpha) = 0\""

SPHERE_POINTS = 20
CIRCLE_ANGLES = 8


def unit_sphere_points(count: int, seed: int) -> np.ndarray:
    """Seeded points of S^2, normalized from a Gaussian draw"""
    rng = np.random.default_rng([seed, 2])
    points = rng.standard_normal((count, 3))
    return points / np.linalg.norm(points, axis=1, keepdims=True)


class Corollary1Suite(VerificationSuite):
    """The 2-sphere of almost contact metric structures and its tautness"""

    name = "corollary1"

    async def run(self) -> List[Dict[str, Any]]:
        self.logger.info(f"Running {self.name} on {self.model.name}")
        checks = []

        checks.extend(await self._check_sphere_axioms())
        checks.extend(await self._check_tautness())
        checks.extend(await self._check_contact_circle())
        checks.extend(await self._check_roundness())

        self.logger.info(f"Finished {self.name}: {len(checks)} checks")
        return checks

    def _parameters(self) -> np.ndarray:
        return unit_sphere_points(SPHERE_POINTS, self.config.seed)

    async def _check_sphere_axioms(self) -> List[Dict[str, Any]]:
        """Almost contact metric axioms for every sampled s, and antisymmetry of nu_s"""
        specs = [("sphere_axioms", SPHERE_REF, THEOREM_THRESHOLD), ("nu_antisymmetric", NU_REF, THEOREM_THRESHOLD)]
        try:
            triple = self.geometry.triple
            samples = self.bundle_samples()
            axioms, antisymmetry = [], []
            for s in self._parameters():
                element = sphere_family(triple, s)
                axioms.extend(almost_contact_defects(element.phi, element.xi, element.eta).values())
                axioms.extend(metric_defects(triple.g_Q, element.phi, element.xi, element.eta).values())
                antisymmetry.append(field_map(lambda nu: nu + nu.T, element.nu, valence=(0, 2), name="nu_s + nu_s^T"))
            return [
                self.group_check("sphere_axioms", SPHERE_REF, axioms, samples, THEOREM_THRESHOLD),
                # a failure here is a finding about the sphere, not an error
                self.group_check("nu_antisymmetric", NU_REF, antisymmetry, samples, THEOREM_THRESHOLD,
                                 informational=True),
            ]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_tautness(self) -> List[Dict[str, Any]]:
        """eta_s ^ nu_s^(2n+1) does not depend on s"""
        specs = [("taut_spread", TAUT_REF, TAUT_SPREAD), ("taut_min_magnitude", TAUT_REF, NONVANISHING_FLOOR)]
        try:
            triple = self.geometry.triple
            samples = self.bundle_samples()
            volumes = [taut_volume(sphere_family(triple, s)) for s in self._parameters()]
            values = np.concatenate(
                [np.stack([v.top_coefficient(s.chart, s.coords) for v in volumes], axis=1) for s in samples], axis=0)
            points = values.shape[0]
            return [
                self.record("taut_spread", TAUT_REF, points, self.relative_spread_per_point(values), TAUT_SPREAD),
                self.record_lower_bound("taut_min_magnitude", TAUT_REF, points, float(np.min(np.abs(values)))),
            ]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_contact_circle(self) -> List[Dict[str, Any]]:
        """cos(tau) eta_2 + sin(tau) eta_3 share one contact volume form"""
        specs = [("contact_circle_taut", CIRCLE_REF, TAUT_SPREAD)]
        try:
            _, eta2, eta3 = self.geometry.triple.etas
            d_eta2, d_eta3 = exterior_derivative(eta2), exterior_derivative(eta3)
            samples = self.bundle_samples()
            volumes = []
            for tau in np.linspace(0.0, np.pi, CIRCLE_ANGLES, endpoint=False):
                a, b = float(np.cos(tau)), float(np.sin(tau))
                eta = field_map(lambda x, y, a=a, b=b: a * x + b * y, eta2, eta3, valence=(0, 1), name=f"eta_{tau:.3f}")
                d_eta = field_map(lambda x, y, a=a, b=b: a * x + b * y, d_eta2, d_eta3, valence=(0, 2),
                                  name=f"d eta_{tau:.3f}")
                volumes.append(contact_volume(eta, d_eta))
            values = np.concatenate(
                [np.stack([v.top_coefficient(s.chart, s.coords) for v in volumes], axis=1) for s in samples], axis=0)
            return [self.record("contact_circle_taut", CIRCLE_REF, values.shape[0],
                                self.relative_spread_per_point(values), TAUT_SPREAD)]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_roundness(self) -> List[Dict[str, Any]]:
        specs = [("roundness_eta_xi", ROUND_REF, THEOREM_THRESHOLD), ("roundness_nu", ROUND_REF, THEOREM_THRESHOLD)]
        try:
            triple = self.geometry.triple
            samples = self.bundle_samples()
            eta_xi, nu = [], []
            for alpha, beta in itertools.combinations((1, 2, 3), 2):
                _, xa, ea = triple.structure(alpha)
                _, xb, eb = triple.structure(beta)
                na, nb = triple.fundamental_form(alpha), triple.fundamental_form(beta)
                eta_xi.append(field_map(lambda e_a, x_b, e_b, x_a: jnp.atleast_1d(e_a @ x_b + e_b @ x_a),
                                        ea, xb, eb, xa, valence=(0, 0), name=f"eta{alpha}(xi{beta}) + eta{beta}(xi{alpha})"))
                nu.append(field_map(lambda x_a, n_b, x_b, n_a: x_a @ n_b + x_b @ n_a, xa, nb, xb, na,
                                    valence=(0, 1), name=f"i_xi{alpha} nu{beta} + i_xi{beta} nu{alpha}"))
            return [
                self.group_check("roundness_eta_xi", ROUND_REF, eta_xi, samples, THEOREM_THRESHOLD),
                self.group_check("roundness_nu", ROUND_REF, nu, samples, THEOREM_THRESHOLD),
            ]
        except Exception as e:
            return self.failed(specs, e)
