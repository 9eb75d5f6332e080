from typing import Any, Dict, List

import jax.numpy as jnp

from ..geometry.circle_bundle import lift_by
from ..geometry.cone import (
    expected_theta,
    extend,
    fibre_coordinate,
    map_holomorphicity_defect,
    sphere_complex_structure,
    upsilon_power_magnitude,
)
from ..geometry.kernel import (
    constant_field,
    exterior_derivative,
    field_map,
    nijenhuis_complex,
    nijenhuis_endo,
    pullback,
    transition_residual,
    wedge,
)
from .base import (
    COROLLARY4_THRESHOLD,
    NONVANISHING_FLOOR,
    QUATERNION_THRESHOLD,
    SASAKI_THRESHOLD,
    TAUTOLOGICAL_THRESHOLD,
    TRANSITION_THRESHOLD,
    VerificationSuite,
)
from .corollary1 import SPHERE_POINTS, unit_sphere_points

QUATERNION_REF = "Corollary 4 proof, \"I_1 I_2 = -I_2 I_1 = I_3\""
METRIC_REF = "Corollary 4 proof, \"g_U := e^t g_C\" is hyperhermitian"
INTEGRABLE_REF = "Corollary 4 item (1), \"[I_1, I_1] = 0\""
SYMPLECTIC_REF = "Corollary 4 item (2), \"are symplectic structures\""
KAHLER_REF = "Corollary 2 restated, \"d omega_1 = 0, where omega_1 = g_U(I_1 (x) Id)\""
THETA_REF = "Eq. (conemetric), \"g_C := g_M + dt (x) dt\"; Theta_alpha = d eta_alpha + dt ^ eta_alpha"
TAUTOLOGICAL_REF = "Corollary 4 proof, \"vartheta = e^t(eta_2 + sqrt(-1) eta_3)\""
RADIUS_REF = "Corollary 4 proof, \"t(u) = log(||u||)\""
UPSILON_REF = "Corollary 4 proof, \"Upsilon = omega_2 + sqrt(-1) omega_3 = d vartheta\""
POWER_REF = "Corollary 4 proof, \"(d vartheta)^{n+1} = (n+1) z_i^n dz_i ^ pi^*(theta_i ^ (d theta_i)^n)\""
SPHERE_REF = "Corollary 4: I_s = a I_1 + b I_2 + c I_3 for (a, b, c) in S^2"
LIOUVILLE_REF = "Eq. (hsymplectic), \"Lambda(X) := gamma(p_*(X))\""


class Corollary4Suite(VerificationSuite):
    """The hyperhermitian cone U(Z) and its holomorphic symplectic form"""

    name = "corollary4"

    async def run(self) -> List[Dict[str, Any]]:
        self.logger.info(f"Running {self.name} on {self.model.name}")
        checks = []

        checks.extend(await self._check_quaternions())
        checks.extend(await self._check_integrability())
        checks.extend(await self._check_symplectic())
        checks.extend(await self._check_fundamental_forms())
        checks.extend(await self._check_tautological())
        checks.extend(await self._check_upsilon())
        checks.extend(await self._check_sphere())
        if self.geometry.cone_map is not None:
            checks.extend(await self._check_liouville())

        self.logger.info(f"Finished {self.name}: {len(checks)} checks")
        return checks

    async def _check_quaternions(self) -> List[Dict[str, Any]]:
        specs = [("quaternion_relations", QUATERNION_REF, QUATERNION_THRESHOLD),
                 ("hyperhermitian_metric", METRIC_REF, COROLLARY4_THRESHOLD)]
        try:
            hyper = self.geometry.hyper
            samples = self.cone_samples()
            I1, I2, I3 = hyper.I
            identity = jnp.eye(hyper.g_U.manifold.dim)

            def relations(a, b, c):
                return jnp.concatenate([
                    (a @ a + identity).ravel(), (b @ b + identity).ravel(), (c @ c + identity).ravel(),
                    (a @ b - c).ravel(), (b @ a + c).ravel(), (b @ c - a).ravel(), (c @ a - b).ravel(),
                ])

            quaternion = field_map(relations, I1, I2, I3, valence=(0, 0), name="quaternion relations")
            compatible = [field_map(lambda i, g: i.T @ g @ i - g, I_a, hyper.g_U, valence=(0, 2),
                                    name=f"g_U(I{k}., I{k}.) - g_U")
                          for k, I_a in enumerate(hyper.I, start=1)]
            return [
                self.field_check("quaternion_relations", QUATERNION_REF, quaternion, samples, QUATERNION_THRESHOLD),
                self.group_check("hyperhermitian_metric", METRIC_REF, compatible, samples, COROLLARY4_THRESHOLD),
            ]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_integrability(self) -> List[Dict[str, Any]]:
        """I_1 is integrable everywhere; I_2 only in the hyperkahler case"""
        specs = [("nijenhuis_i1", INTEGRABLE_REF, COROLLARY4_THRESHOLD),
                 ("normality_i2", INTEGRABLE_REF, SASAKI_THRESHOLD)]
        try:
            I1, I2, _ = self.geometry.hyper.I
            samples = self.cone_samples()
            return [
                self.field_check("nijenhuis_i1", INTEGRABLE_REF, nijenhuis_endo(I1), samples, COROLLARY4_THRESHOLD),
                self.field_check("normality_i2", INTEGRABLE_REF, nijenhuis_complex(I2), samples, SASAKI_THRESHOLD),
            ]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_symplectic(self) -> List[Dict[str, Any]]:
        specs = [("d_omega2", SYMPLECTIC_REF, COROLLARY4_THRESHOLD),
                 ("d_omega3", SYMPLECTIC_REF, COROLLARY4_THRESHOLD),
                 ("d_omega1", KAHLER_REF, SASAKI_THRESHOLD)]
        try:
            _, omega2, omega3 = self.geometry.hyper.omegas
            samples = self.cone_samples()
            return [
                self.field_check("d_omega2", SYMPLECTIC_REF, exterior_derivative(omega2), samples, COROLLARY4_THRESHOLD),
                self.field_check("d_omega3", SYMPLECTIC_REF, exterior_derivative(omega3), samples, COROLLARY4_THRESHOLD),
                self.field_check("d_omega1", KAHLER_REF, exterior_derivative(self.geometry.hyper.kahler_form(1)),
                                 samples, SASAKI_THRESHOLD),
            ]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_fundamental_forms(self) -> List[Dict[str, Any]]:
        """Theta_alpha, omega_alpha = d(e^t eta_alpha) and d Theta_alpha = -dt ^ Theta_alpha for alpha = 2, 3"""
        specs = [("theta_expected", THETA_REF, COROLLARY4_THRESHOLD),
                 ("omega_exact", SYMPLECTIC_REF, COROLLARY4_THRESHOLD),
                 ("d_theta", THETA_REF, COROLLARY4_THRESHOLD)]
        try:
            g = self.geometry
            cone, hyper = g.cone, g.hyper
            samples = self.cone_samples()
            dt = constant_field(cone.total, jnp.zeros(cone.total.dim).at[-1].set(1.0), valence=(0, 1), name="dt")
            theta, exact, closed = [], [], []
            for alpha in (2, 3):
                eta = g.triple.etas[alpha - 1]
                Theta, omega = hyper.thetas[alpha - 1], hyper.omegas[alpha - 1]
                theta.append(field_map(lambda a, b: a - b, Theta, expected_theta(cone, eta, self.kappa),
                                       valence=(0, 2), name=f"Theta{alpha} - expected"))
                scaled = extend(cone, lambda e, t: jnp.exp(t) * jnp.concatenate([e, jnp.zeros(1)]), eta,
                                valence=(0, 1), name=f"e^t eta{alpha}")
                d_eta = extend(cone, lambda d, t: jnp.exp(t) * jnp.pad(d, ((0, 1), (0, 1))), exterior_derivative(eta),
                               valence=(0, 2), name=f"e^t d eta{alpha}")
                correction = 1.0 / self.kappa - 1.0
                exact.append(field_map(lambda w, d, e, c=correction: w - d - c * e, omega, exterior_derivative(scaled),
                                       d_eta, valence=(0, 2), name=f"omega{alpha} - d(e^t eta{alpha})"))
                closed.append(field_map(lambda d, w: d + w, exterior_derivative(Theta), wedge(dt, Theta),
                                        valence=(0, 3), name=f"d Theta{alpha} + dt ^ Theta{alpha}"))
            return [
                self.group_check("theta_expected", THETA_REF, theta, samples, COROLLARY4_THRESHOLD),
                self.group_check("omega_exact", SYMPLECTIC_REF, exact, samples, COROLLARY4_THRESHOLD),
                self.group_check("d_theta", THETA_REF, closed, samples, COROLLARY4_THRESHOLD),
            ]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_tautological(self) -> List[Dict[str, Any]]:
        """vartheta against e^t(eta_2 + i eta_3), |z|^2 h = e^(2t) and chart independence of vartheta"""
        specs = [("tautological_form", TAUTOLOGICAL_REF, TAUTOLOGICAL_THRESHOLD),
                 ("fibre_norm", RADIUS_REF, TAUTOLOGICAL_THRESHOLD)]
        if self.multi_chart:
            specs.append(("transition_vartheta", TAUTOLOGICAL_REF, TRANSITION_THRESHOLD))
        try:
            g = self.geometry
            cone, hyper = g.cone, g.hyper
            samples = self.cone_samples()
            _, eta2, eta3 = g.triple.etas
            expected = extend(cone, lambda a, b, t: jnp.exp(t) * jnp.concatenate([a + 1j * b, jnp.zeros(1)]),
                              eta2, eta3, valence=(0, 1), name="e^t(eta2 + i eta3)")
            difference = field_map(lambda a, b: a - b, hyper.vartheta, expected, valence=(0, 1),
                                   name="vartheta - e^t(eta2 + i eta3)")
            h = extend(cone, lambda value, t: value, lift_by(g.bundle, lambda value: value, g.weight.h, valence=(0, 0),
                                                            name="h"), valence=(0, 0), name="h")
            norm = field_map(lambda c, z, weight: jnp.abs(z) ** 2 * weight - jnp.exp(2.0 * c[-1]),
                             fibre_coordinate(cone, g.weight), h, valence=(0, 0), name="|z|^2 h - e^2t",
                             with_coords=True)
            checks = [
                self.field_check("tautological_form", TAUTOLOGICAL_REF, difference, samples, TAUTOLOGICAL_THRESHOLD),
                self.field_check("fibre_norm", RADIUS_REF, norm, samples, TAUTOLOGICAL_THRESHOLD),
            ]
            if self.multi_chart:
                overlaps = cone.total.overlap_sample(self.overlap_count(), self.config.seed)
                checks.append(self.record("transition_vartheta", TAUTOLOGICAL_REF, sum(s.count for s in overlaps),
                                          transition_residual(hyper.vartheta, overlaps), TRANSITION_THRESHOLD))
            return checks
        except Exception as e:
            return self.failed(specs, e)

    async def _check_upsilon(self) -> List[Dict[str, Any]]:
        specs = [("upsilon_exact", UPSILON_REF, COROLLARY4_THRESHOLD),
                 ("upsilon_holomorphic", UPSILON_REF, COROLLARY4_THRESHOLD),
                 ("upsilon_power_min_magnitude", POWER_REF, NONVANISHING_FLOOR)]
        try:
            g = self.geometry
            hyper = g.hyper
            samples = self.cone_samples()
            exact = field_map(lambda u, d: u - d, hyper.upsilon, exterior_derivative(hyper.vartheta), valence=(0, 2),
                              name="Upsilon - d vartheta")
            holomorphic = field_map(lambda u, i: i.T @ u - 1j * u, hyper.upsilon, hyper.I[0], valence=(0, 2),
                                    name="Upsilon(I1., .) - i Upsilon")
            points = sum(s.count for s in samples)
            return [
                self.field_check("upsilon_exact", UPSILON_REF, exact, samples, COROLLARY4_THRESHOLD),
                self.field_check("upsilon_holomorphic", UPSILON_REF, holomorphic, samples, COROLLARY4_THRESHOLD),
                self.record_lower_bound("upsilon_power_min_magnitude", POWER_REF, points,
                                        upsilon_power_magnitude(hyper.upsilon, g.n, samples)),
            ]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_sphere(self) -> List[Dict[str, Any]]:
        """Every I_s is an almost complex structure compatible with g_U"""
        specs = [("sphere_structures", SPHERE_REF, COROLLARY4_THRESHOLD)]
        try:
            hyper = self.geometry.hyper
            samples = self.cone_samples()
            identity = jnp.eye(hyper.g_U.manifold.dim)
            fields = []
            for s in unit_sphere_points(SPHERE_POINTS, self.config.seed):
                I_s = sphere_complex_structure(hyper.I, s)
                fields.append(field_map(lambda i, g: jnp.concatenate([(i @ i + identity).ravel(),
                                                                      (i.T @ g @ i - g).ravel()]),
                                        I_s, hyper.g_U, valence=(0, 0), name="I_s relations"))
            return [self.group_check("sphere_structures", SPHERE_REF, fields, samples, COROLLARY4_THRESHOLD)]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_liouville(self) -> List[Dict[str, Any]]:
        """On a cotangent model the cone is (T*M)^x, vartheta the Liouville form and F holomorphic"""
        specs = [("liouville_form", LIOUVILLE_REF, TAUTOLOGICAL_THRESHOLD),
                 ("liouville_symplectic", LIOUVILLE_REF, COROLLARY4_THRESHOLD),
                 ("cone_map_holomorphic", LIOUVILLE_REF, COROLLARY4_THRESHOLD)]
        try:
            g = self.geometry
            hyper, F, target = g.hyper, g.cone_map, g.model.target
            samples = self.cone_samples()
            liouville = pullback(F, target.liouville)
            symplectic = pullback(F, exterior_derivative(target.liouville))
            return [
                self.field_check("liouville_form", LIOUVILLE_REF,
                                 field_map(lambda a, b: a - b, hyper.vartheta, liouville, valence=(0, 1),
                                           name="vartheta - F^* Lambda"),
                                 samples, TAUTOLOGICAL_THRESHOLD),
                self.field_check("liouville_symplectic", LIOUVILLE_REF,
                                 field_map(lambda a, b: a - b, hyper.upsilon, symplectic, valence=(0, 2),
                                           name="Upsilon - F^* d Lambda"),
                                 samples, COROLLARY4_THRESHOLD),
                self.field_check("cone_map_holomorphic", LIOUVILLE_REF,
                                 map_holomorphicity_defect(F, hyper.I[0], jnp.asarray(target.complex_structure)),
                                 samples, COROLLARY4_THRESHOLD),
            ]
        except Exception as e:
            return self.failed(specs, e)
