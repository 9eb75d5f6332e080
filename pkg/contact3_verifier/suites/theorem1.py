from typing import Any, Dict, List

import jax.numpy as jnp

from ..geometry.circle_bundle import lift_by, lift_form, normality_tensor
from ..geometry.complex_contact import gauge_transition_residual
from ..geometry.kernel import (
    WedgeForm,
    covariance_residual,
    exterior_derivative,
    field_map,
    lie_derivative_metric,
    min_topform_magnitude,
    standard_complex_structure,
    transition_residual,
    wedge,
)
from ..geometry.triple_structure import (
    CYCLIC,
    almost_contact_defects,
    contact_metric_defect,
    contact_volume,
    kuo_defects,
    metric_defects,
    r1_defects,
    reeb_defect,
)
from .base import NONVANISHING_FLOOR, THEOREM_THRESHOLD, TRANSITION_THRESHOLD, VerificationSuite

ATLAS_REF = "contact atlas axioms, theta_i ^ (d theta_i)^n != 0, theta_i = f_ij theta_j"
NORMALIZED_REF = "normalized contact structure, u_i = Re(theta_i)/sqrt(h_i)"
OMEGA_REF = "G_i := Re(Omega_i) = du_i - sigma_i ^ v_i"
FRAME_REF = "u_i(A_i) = v_i(B_i) = 1"
METRIC_REF = "G_i(X,Y) = g_Z(G_i X,Y); relations 1-3"
TRANSITION_REF = "Lemma: Psi_i = Psi_j and Xi_i = Xi_j"
NORMAL_REF = "Theorem 1 (1): (Phi_1, xi_1, eta_1) is a normal almost contact structure"
KILLING_REF = "Theorem 1 (1): L_xi1 g_Q = 0"
VOLUME_REF = "Theorem 1 (2): eta_2 ^ (d eta_2)^(2n+1) = eta_3 ^ (d eta_3)^(2n+1) != 0"
PSI_REF = "Psi(Xi) = 0, eta(Xi) = 1; (Psi o Psi)(Y) = -Y + eta_2(Y) xi_2 - eta_2(Phi_1 Y) Phi_1(xi_2)"
FIRST_REF = "first properties: eta_2(xi_1) = eta_1(xi_2) = 0, Phi_2(xi_1) = -Phi_1(xi_2), Phi_2(xi_2) = 0"
ALMOST_REF = "almost contact axioms: Phi o Phi = -Id + eta (x) xi, eta(xi) = 1"
KUO_REF = "Kuo: Phi_1(xi_2) = -Phi_2(xi_1), eta_1 o Phi_2 = -eta_2 o Phi_1"
R1_REF = "3-structure relations R1"
COMPATIBLE_REF = "Claim 2: eta_alpha(X) = g_Q(X, xi_alpha)"
CONTACT_METRIC_REF = "contact metric: d eta = g(Phi (x) Id)"
REEB_REF = "Claim 2: xi_alpha is the Reeb field of eta_alpha"


class Theorem1Suite(VerificationSuite):
    """The almost contact metric 3-structure on Q(L)"""

    name = "theorem1"

    async def run(self) -> List[Dict[str, Any]]:
        self.logger.info(f"Running {self.name} on {self.model.name}")
        checks = []

        checks.extend(await self._check_atlas())
        checks.extend(await self._check_normalized_data())
        checks.extend(await self._check_vertical_frame())
        checks.extend(await self._check_associated_metric())
        if self.multi_chart:
            checks.extend(await self._check_base_transitions())
            checks.extend(await self._check_bundle_transitions())
        checks.extend(await self._check_hatakeyama())
        checks.extend(await self._check_kobayashi())
        checks.extend(await self._check_psi_xi())
        checks.extend(await self._check_first_properties())
        checks.extend(await self._check_almost_contact())
        checks.extend(await self._check_kuo())
        checks.extend(await self._check_r1())
        checks.extend(await self._check_metric())

        self.logger.info(f"Finished {self.name}: {len(checks)} checks")
        return checks

    def _atlas_threshold(self) -> float:
        return max(self.config.tol_ad, TRANSITION_THRESHOLD) if self.multi_chart else self.config.tol_ad

    async def _check_atlas(self) -> List[Dict[str, Any]]:
        """Cocycle, weight and contact-volume residuals of the input data"""
        threshold = self._atlas_threshold()
        specs = [("atlas_cocycle", ATLAS_REF, threshold), ("atlas_contact_volume_min_magnitude", ATLAS_REF, NONVANISHING_FLOOR)]
        try:
            report = self.geometry.validation
            worst = max(report.cocycle, report.cocycle_identity, report.weight, report.round_trip,
                        report.power_consistency)
            return [
                self.record("atlas_cocycle", ATLAS_REF, report.points, worst, threshold),
                self.record_lower_bound("atlas_contact_volume_min_magnitude", ATLAS_REF, report.points,
                                        report.min_contact_volume),
            ]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_normalized_data(self) -> List[Dict[str, Any]]:
        """v = u o J and the two expressions of the Omega-structure"""
        specs = [("v_equals_u_J", NORMALIZED_REF, self.config.tol_ad),
                 ("omega_real_parts", OMEGA_REF, self.config.tol_ad),
                 ("omega_type", OMEGA_REF, self.config.tol_ad),
                 ("varpi_omega_nonvanishing_min_magnitude", OMEGA_REF, NONVANISHING_FLOOR)]
        try:
            g = self.geometry
            samples = self.base_samples()
            nd, os = g.normalized, g.omega_structure
            J = jnp.asarray(standard_complex_structure(g.atlas.m))
            du, dv = exterior_derivative(nd.u), exterior_derivative(nd.v)
            real_parts = [
                field_map(lambda G, d, sv: G - d + sv, os.G_hat, du, wedge(os.sigma, nd.v), valence=(0, 2), name="G_hat"),
                field_map(lambda H, d, su: H - d - su, os.H_hat, dv, wedge(os.sigma, nd.u), valence=(0, 2), name="H_hat"),
            ]
            checks = [
                self.field_check("v_equals_u_J", NORMALIZED_REF,
                                 field_map(lambda u, v: v - J.T @ u, nd.u, nd.v, valence=(0, 1), name="v - u o J"),
                                 samples, self.config.tol_ad),
                self.group_check("omega_real_parts", OMEGA_REF, real_parts, samples, self.config.tol_ad),
                self.field_check("omega_type", OMEGA_REF,
                                 field_map(lambda G, H: H - J.T @ G, os.G_hat, os.H_hat, valence=(0, 2), name="H - G(J.,.)"),
                                 samples, self.config.tol_ad),
            ]
            volume = WedgeForm([nd.varpi] + [os.omega] * g.n, name="varpi^Omega^n")
            index = [tuple(range(g.atlas.m))]
            points = sum(s.count for s in samples)
            smallest = min(float(abs(volume.coefficients(s.chart, s.coords, index)).min()) for s in samples)
            checks.append(self.record_lower_bound("varpi_omega_nonvanishing_min_magnitude", OMEGA_REF, points, smallest))
            return checks
        except Exception as e:
            return self.failed(specs, e)

    async def _check_vertical_frame(self) -> List[Dict[str, Any]]:
        """Normalization of (A, B), B = -JA and A, B in ker G_hat"""
        specs = [("vertical_frame", FRAME_REF, self.config.tol_ad)]
        try:
            g = self.geometry
            nd, vf, os = g.normalized, g.frame, g.omega_structure
            J = jnp.asarray(standard_complex_structure(g.atlas.m))

            def defect(u, v, A, B, G):
                return jnp.concatenate([
                    jnp.stack([u @ A - 1.0, v @ B - 1.0, u @ B, v @ A]),
                    B + J @ A, A @ G, B @ G,
                ])

            field = field_map(defect, nd.u, nd.v, vf.A, vf.B, os.G_hat, valence=(0, 0), name="frame")
            return [self.field_check("vertical_frame", FRAME_REF, field, self.base_samples(), self.config.tol_ad)]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_associated_metric(self) -> List[Dict[str, Any]]:
        """Compatibility of g_Z with G_hat and the relations between G, H, J, A, B"""
        specs = [("associated_metric", METRIC_REF, self.config.tol_ad),
                 ("associated_relations", METRIC_REF, self.config.tol_ad)]
        try:
            g = self.geometry
            nd, vf, os, amd = g.normalized, g.frame, g.omega_structure, g.metric
            dim = g.atlas.base.dim
            J = jnp.asarray(standard_complex_structure(g.atlas.m))
            I = jnp.eye(dim)
            samples = self.base_samples()

            compatibility = [
                field_map(lambda Gh, G, m: Gh - G.T @ m, os.G_hat, amd.G, amd.g_Z, valence=(0, 2), name="G_hat - g(G.,.)"),
                field_map(lambda u, A, m: u - m @ A, nd.u, vf.A, amd.g_Z, valence=(0, 1), name="u - g(A,.)"),
                field_map(lambda m: J.T @ m @ J - m, amd.g_Z, valence=(0, 2), name="g(J.,J.) - g"),
            ]

            def relations(G, H, u, v, A, B):
                square = G @ G + I - jnp.outer(A, u) - jnp.outer(B, v)
                target = J + jnp.outer(B, u) - jnp.outer(A, v)
                return jnp.concatenate([
                    square.ravel(), (H @ G - target).ravel(), (G @ H + target).ravel(),
                    G @ A, G @ B, H @ A, H @ B, (G @ J + J @ G).ravel(), (H - G @ J).ravel(),
                ])

            relation = field_map(relations, amd.G, amd.H, nd.u, nd.v, vf.A, vf.B, valence=(0, 0), name="relations")
            return [
                self.group_check("associated_metric", METRIC_REF, compatibility, samples, self.config.tol_ad),
                self.field_check("associated_relations", METRIC_REF, relation, samples, self.config.tol_ad),
            ]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_base_transitions(self) -> List[Dict[str, Any]]:
        """Gauge transition laws of sigma, u, v, Omega, A, B, G and g_Z"""
        specs = [("transition_gauge", TRANSITION_REF, TRANSITION_THRESHOLD),
                 ("transition_base_tensors", TRANSITION_REF, TRANSITION_THRESHOLD)]
        try:
            g = self.geometry
            w, nd, os, vf, amd = g.weight, g.normalized, g.omega_structure, g.frame, g.metric
            count = self.overlap_count()
            samples = g.atlas.base.overlap_sample(count, self.config.seed)
            points = sum(s.count for s in samples)

            def rotation(ov, first_sign=1.0):
                psi = w.transition_angle(ov.source, ov.target)
                return lambda x, a, b: jnp.cos(psi(x)) * a - first_sign * jnp.sin(psi(x)) * b

            worst = max(
                covariance_residual(nd.u, [nd.u, nd.v], samples, rotation),
                covariance_residual(nd.v, [nd.v, nd.u], samples, lambda ov: rotation(ov, -1.0)),
                covariance_residual(vf.A, [vf.A, vf.B], samples, rotation),
                covariance_residual(amd.G, [amd.G, amd.H], samples, rotation),
                covariance_residual(
                    os.omega, [os.omega], samples,
                    lambda ov: (lambda x, o, psi=w.transition_angle(ov.source, ov.target): jnp.exp(-1j * psi(x)) * o)),
            )
            gauge = gauge_transition_residual(w, g.sigma, count, self.config.seed)
            tensors = transition_residual(amd.g_Z, samples)
            return [
                self.record("transition_gauge", TRANSITION_REF, points, max(gauge, worst), TRANSITION_THRESHOLD),
                self.record("transition_base_tensors", TRANSITION_REF, points, tensors, TRANSITION_THRESHOLD),
            ]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_bundle_transitions(self) -> List[Dict[str, Any]]:
        """The constructed tensors on Q are chart independent"""
        names = ("eta1", "eta2", "eta3", "Psi", "Xi", "Phi2", "Phi3", "g_Q")
        specs = [(f"transition_{n}", TRANSITION_REF, TRANSITION_THRESHOLD) for n in names]
        try:
            g = self.geometry
            samples = g.bundle.total.overlap_sample(self.overlap_count(), self.config.seed)
            points = sum(s.count for s in samples)
            fields = (g.eta1, g.kobayashi.eta2, g.kobayashi.eta3, g.psi_xi.psi, g.psi_xi.xi, g.phi2, g.third.phi, g.g_Q)
            return [self.record(f"transition_{n}", TRANSITION_REF, points, transition_residual(f, samples),
                                TRANSITION_THRESHOLD)
                    for n, f in zip(names, fields)]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_hatakeyama(self) -> List[Dict[str, Any]]:
        """Normality of (Phi_1, xi_1, eta_1), d eta_1 = pi^* omega and the horizontal lift"""
        specs = [("normality_phi1", NORMAL_REF, THEOREM_THRESHOLD),
                 ("curvature_pullback", NORMAL_REF, THEOREM_THRESHOLD),
                 ("curvature_J_invariant", NORMAL_REF, THEOREM_THRESHOLD),
                 ("horizontal_lift", NORMAL_REF, THEOREM_THRESHOLD),
                 ("killing_xi1", KILLING_REF, THEOREM_THRESHOLD)]
        try:
            g = self.geometry
            hs = g.hatakeyama
            samples = self.bundle_samples()
            dim = g.atlas.base.dim
            J = jnp.asarray(standard_complex_structure(g.atlas.m))
            pulled = lift_form(g.bundle, g.curvature)
            curvature = field_map(lambda d, w: d - w, exterior_derivative(hs.eta), pulled, valence=(0, 2),
                                  name="d eta1 - pi^* omega")
            invariant = field_map(lambda w: J.T @ w @ J - w, g.curvature, valence=(0, 2), name="omega J-invariance")

            # columns are the horizontal lifts of d/dx_k
            lifts = lift_by(g.bundle, lambda s: jnp.concatenate([jnp.eye(dim), -s[None, :]], axis=0), g.sigma,
                            valence=(0, 0), name="lifts")
            lift = field_map(lambda p, L, e: jnp.concatenate([(p @ L - L @ J).ravel(), e @ L]),
                             hs.phi, lifts, hs.eta, valence=(0, 0), name="Phi1 X# - (JX)#")
            return [
                self.field_check("normality_phi1", NORMAL_REF, normality_tensor(hs.phi, hs.xi, hs.eta), samples,
                                 THEOREM_THRESHOLD),
                self.field_check("curvature_pullback", NORMAL_REF, curvature, samples, THEOREM_THRESHOLD),
                self.field_check("curvature_J_invariant", NORMAL_REF, invariant, self.base_samples(), THEOREM_THRESHOLD),
                self.field_check("horizontal_lift", NORMAL_REF, lift, samples, THEOREM_THRESHOLD),
                self.field_check("killing_xi1", KILLING_REF, lie_derivative_metric(g.g_Q, hs.xi), samples,
                                 THEOREM_THRESHOLD),
            ]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_kobayashi(self) -> List[Dict[str, Any]]:
        """Equal, nonvanishing contact volumes of eta_2 and eta_3"""
        specs = [("volume_equality", VOLUME_REF, THEOREM_THRESHOLD),
                 ("volume_min_magnitude", VOLUME_REF, NONVANISHING_FLOOR),
                 ("eta3_two_ways", VOLUME_REF, THEOREM_THRESHOLD)]
        try:
            g = self.geometry
            kf = g.kobayashi
            samples = self.bundle_samples()
            vol2, vol3 = contact_volume(kf.eta2), contact_volume(kf.eta3)
            points, worst, smallest = 0, 0.0, float("inf")
            for s in samples:
                a, b = vol2.top_coefficient(s.chart, s.coords), vol3.top_coefficient(s.chart, s.coords)
                scale = max(float(abs(a).max()), 1e-300)
                worst = max(worst, float(abs(a - b).max()) / scale)
                smallest = min(smallest, min_topform_magnitude(vol2, [s]))
                points += s.count
            two_ways = field_map(lambda a, b: a - b, kf.eta3, g.third.eta, valence=(0, 1), name="eta3 - eta1 o Phi2")
            return [
                self.record("volume_equality", VOLUME_REF, points, worst, THEOREM_THRESHOLD),
                self.record_lower_bound("volume_min_magnitude", VOLUME_REF, points, smallest),
                self.field_check("eta3_two_ways", VOLUME_REF, two_ways, samples, THEOREM_THRESHOLD),
            ]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_psi_xi(self) -> List[Dict[str, Any]]:
        """Psi(Xi) = 0, eta_2(Xi) = 1, the fundamental identity and Phi_1 Psi = -Psi Phi_1"""
        specs = [("psi_xi", PSI_REF, THEOREM_THRESHOLD),
                 ("fundamental_identity", PSI_REF, THEOREM_THRESHOLD),
                 ("psi_anticommutes", PSI_REF, THEOREM_THRESHOLD)]
        try:
            g = self.geometry
            hs, px, kf = g.hatakeyama, g.psi_xi, g.kobayashi
            samples = self.bundle_samples()
            I = jnp.eye(g.bundle.total.dim)

            def basics(psi, xi2, eta2, xi1, eta1):
                return jnp.concatenate([psi @ xi2, jnp.atleast_1d(eta2 @ xi2 - 1.0), psi.T @ eta2, psi @ xi1, psi.T @ eta1])

            def fundamental(psi, phi1, xi1, eta1, xi2, eta2):
                horizontal = I - jnp.outer(xi1, eta1)
                rhs = -I + jnp.outer(xi2, eta2) - jnp.outer(phi1 @ xi2, phi1.T @ eta2)
                return (psi @ psi - rhs) @ horizontal

            return [
                self.field_check("psi_xi", PSI_REF,
                                 field_map(basics, px.psi, px.xi, kf.eta2, hs.xi, hs.eta, valence=(0, 0), name="Psi Xi"),
                                 samples, THEOREM_THRESHOLD),
                self.field_check("fundamental_identity", PSI_REF,
                                 field_map(fundamental, px.psi, hs.phi, hs.xi, hs.eta, px.xi, kf.eta2,
                                           valence=(1, 1), name="Psi o Psi"),
                                 samples, THEOREM_THRESHOLD),
                self.field_check("psi_anticommutes", PSI_REF,
                                 field_map(lambda p, f: f @ p + p @ f, px.psi, hs.phi, valence=(1, 1), name="Phi1 Psi + Psi Phi1"),
                                 samples, THEOREM_THRESHOLD),
            ]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_first_properties(self) -> List[Dict[str, Any]]:
        specs = [("first_properties", FIRST_REF, THEOREM_THRESHOLD)]
        try:
            g = self.geometry
            hs, px, kf = g.hatakeyama, g.psi_xi, g.kobayashi

            def defect(eta1, xi1, eta2, xi2, phi1, phi2):
                return jnp.concatenate([
                    jnp.stack([eta2 @ xi1, eta1 @ xi2]), phi2 @ xi1 + phi1 @ xi2, phi2 @ xi2,
                ])

            field = field_map(defect, hs.eta, hs.xi, kf.eta2, px.xi, hs.phi, g.phi2, valence=(0, 0), name="first")
            return [self.field_check("first_properties", FIRST_REF, field, self.bundle_samples(), THEOREM_THRESHOLD)]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_almost_contact(self) -> List[Dict[str, Any]]:
        specs = [(f"almost_contact_{a}", ALMOST_REF, THEOREM_THRESHOLD) for a in (1, 2, 3)]
        specs += [(f"reeb_{a}", REEB_REF, THEOREM_THRESHOLD) for a in (2, 3)]
        try:
            triple = self.geometry.triple
            samples = self.bundle_samples()
            checks = [self.group_check(f"almost_contact_{a}", ALMOST_REF,
                                       list(almost_contact_defects(*triple.structure(a)).values()),
                                       samples, THEOREM_THRESHOLD)
                      for a in (1, 2, 3)]
            checks += [self.field_check(f"reeb_{a}", REEB_REF, reeb_defect(triple, a), samples, THEOREM_THRESHOLD)
                       for a in (2, 3)]
            return checks
        except Exception as e:
            return self.failed(specs, e)

    async def _check_kuo(self) -> List[Dict[str, Any]]:
        specs = [("kuo_relations", KUO_REF, THEOREM_THRESHOLD)]
        try:
            g = self.geometry
            defects = kuo_defects(g.hatakeyama, g.phi2, g.psi_xi, g.kobayashi)
            return [self.group_check("kuo_relations", KUO_REF, list(defects.values()), self.bundle_samples(),
                                     THEOREM_THRESHOLD)]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_r1(self) -> List[Dict[str, Any]]:
        specs = [(f"r1_{a}{b}{c}", R1_REF, THEOREM_THRESHOLD) for a, b, c in CYCLIC]
        try:
            triple = self.geometry.triple
            samples = self.bundle_samples()
            return [self.group_check(f"r1_{a}{b}{c}", R1_REF, list(r1_defects(triple, a, b, c).values()),
                                     samples, THEOREM_THRESHOLD)
                    for a, b, c in CYCLIC]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_metric(self) -> List[Dict[str, Any]]:
        """Metric compatibility for all three structures and the contact metric condition for 2 and 3"""
        specs = [(f"metric_compatible_{a}", COMPATIBLE_REF, THEOREM_THRESHOLD) for a in (1, 2, 3)]
        specs += [(f"contact_metric_{a}", CONTACT_METRIC_REF, THEOREM_THRESHOLD) for a in (2, 3)]
        try:
            triple = self.geometry.triple
            samples = self.bundle_samples()
            checks = [self.group_check(f"metric_compatible_{a}", COMPATIBLE_REF,
                                       list(metric_defects(triple.g_Q, *triple.structure(a)).values()),
                                       samples, THEOREM_THRESHOLD)
                      for a in (1, 2, 3)]
            checks += [self.field_check(f"contact_metric_{a}", CONTACT_METRIC_REF,
                                        contact_metric_defect(triple, a, self.kappa), samples, THEOREM_THRESHOLD)
                       for a in (2, 3)]
            return checks
        except Exception as e:
            return self.failed(specs, e)
