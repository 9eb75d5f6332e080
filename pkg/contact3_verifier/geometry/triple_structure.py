"""The almost contact metric 3-structure on Q(L) and its sphere of structures."""
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import jax.numpy as jnp
import numpy as np

from ..exceptions import KuoHypothesisViolated, NotUnitSphereParameter
from .circle_bundle import CircleBundleAtlas, HatakeyamaStructure, lift_by, lift_form, lift_matrix, lift_vector, normality_tensor
from .complex_contact import AssociatedMetricData, NormalizedContactData, VerticalFrame
from .kernel import (
    ChartSample,
    MetricField,
    TensorField,
    WedgeForm,
    covariant_derivative,
    exterior_derivative,
    field_map,
    probe_samples,
)

logger = logging.getLogger(__name__)

KUO_TOLERANCE = 1e-6
UNIT_SPHERE_TOLERANCE = 1e-12

CYCLIC = ((1, 2, 3), (2, 3, 1), (3, 1, 2))


@dataclass(frozen=True)
class KobayashiForms:
    eta2: TensorField
    eta3: TensorField


def kobayashi_contact(bundle: CircleBundleAtlas, nd: NormalizedContactData) -> KobayashiForms:
    """eta_2 = cos(phi) u + sin(phi) v and eta_3 = sin(phi) u - cos(phi) v, pulled back to Q"""
    u, v = lift_form(bundle, nd.u), lift_form(bundle, nd.v)
    eta2 = field_map(lambda q, a, b: jnp.cos(q[-1]) * a + jnp.sin(q[-1]) * b, u, v,
                     valence=(0, 1), name="eta2", with_coords=True)
    eta3 = field_map(lambda q, a, b: jnp.sin(q[-1]) * a - jnp.cos(q[-1]) * b, u, v,
                     valence=(0, 1), name="eta3", with_coords=True)
    return KobayashiForms(eta2, eta3)


def contact_volume(eta: TensorField, d_eta: Optional[TensorField] = None) -> WedgeForm:
    """eta ^ (d eta)^k with 2k + 1 the dimension; `d_eta` replaces d of eta when already known"""
    k = (eta.manifold.dim - 1) // 2
    d_eta = d_eta if d_eta is not None else exterior_derivative(eta)
    return WedgeForm([eta] + [d_eta] * k, name=f"{eta.name}^d{eta.name}^{k}")


@dataclass(frozen=True)
class PsiXi:
    psi: TensorField
    xi: TensorField


def psi_xi(bundle: CircleBundleAtlas, amd: AssociatedMetricData, vf: VerticalFrame, sigma: TensorField) -> PsiXi:
    """Psi = cos(phi) (G pi_*)^# + sin(phi) (H pi_*)^#, Xi = cos(phi) A^# + sin(phi) B^#"""
    psi = lift_by(bundle, lambda G, H, s, phi: lift_matrix(jnp.cos(phi) * G + jnp.sin(phi) * H, s),
                  amd.G, amd.H, sigma, valence=(1, 1), name="Psi", with_angle=True)
    xi = lift_by(bundle, lambda A, B, s, phi: lift_vector(jnp.cos(phi) * A + jnp.sin(phi) * B, s),
                 vf.A, vf.B, sigma, valence=(1, 0), name="xi2", with_angle=True)
    return PsiXi(psi, xi)


def phi_two(hs: HatakeyamaStructure, px: PsiXi, kf: KobayashiForms) -> TensorField:
    """Phi_2 = Psi - eta_1 (x) Phi_1(xi_2) - (eta_2 o Phi_1) (x) xi_1"""

    def value(psi, phi1, xi1, eta1, xi2, eta2):
        return psi - jnp.outer(phi1 @ xi2, eta1) - jnp.outer(xi1, phi1.T @ eta2)

    return field_map(value, px.psi, hs.phi, hs.xi, hs.eta, px.xi, kf.eta2, valence=(1, 1), name="Phi2")


def kuo_defects(hs: HatakeyamaStructure, phi2: TensorField, px: PsiXi, kf: KobayashiForms) -> Dict[str, TensorField]:
    """The two relations from which a third structure is assembled"""
    return {
        "xi": field_map(lambda p1, p2, x1, x2: p1 @ x2 + p2 @ x1, hs.phi, phi2, hs.xi, px.xi,
                        valence=(1, 0), name="Phi1 xi2 + Phi2 xi1"),
        "eta": field_map(lambda p1, p2, e1, e2: p2.T @ e1 + p1.T @ e2, hs.phi, phi2, hs.eta, kf.eta2,
                         valence=(0, 1), name="eta1 Phi2 + eta2 Phi1"),
        "phi": field_map(lambda p1, p2, x1, x2, e1, e2: p1 @ p2 - jnp.outer(x1, e2) + p2 @ p1 - jnp.outer(x2, e1),
                         hs.phi, phi2, hs.xi, px.xi, hs.eta, kf.eta2, valence=(1, 1), name="anticommutator"),
    }


@dataclass(frozen=True)
class ThirdStructure:
    phi: TensorField
    xi: TensorField
    eta: TensorField


def third_structure(hs: HatakeyamaStructure, phi2: TensorField, px: PsiXi, kf: KobayashiForms,
                    probe: Optional[Sequence[ChartSample]] = None) -> ThirdStructure:
    """xi_3 = Phi_1 xi_2, eta_3 = eta_1 o Phi_2, Phi_3 = Phi_1 Phi_2 - eta_2 (x) xi_1"""
    samples = probe or probe_samples(phi2.manifold)
    for name, defect in kuo_defects(hs, phi2, px, kf).items():
        for s in samples:
            residual = float(np.max(np.abs(defect.batch(s.chart, s.coords))))
            if not residual <= KUO_TOLERANCE:
                raise KuoHypothesisViolated(f"{defect.name} = {residual:.3e} on chart {s.chart}")
    xi3 = field_map(lambda p1, x2: p1 @ x2, hs.phi, px.xi, valence=(1, 0), name="xi3")
    eta3 = field_map(lambda p2, e1: p2.T @ e1, phi2, hs.eta, valence=(0, 1), name="eta3")
    phi3 = field_map(lambda p1, p2, x1, e2: p1 @ p2 - jnp.outer(x1, e2), hs.phi, phi2, hs.xi, kf.eta2,
                     valence=(1, 1), name="Phi3")
    return ThirdStructure(phi3, xi3, eta3)


def bundle_metric(bundle: CircleBundleAtlas, g_Z: TensorField, eta1: TensorField,
                  probe: Optional[Sequence[ChartSample]] = None) -> MetricField:
    """g_Q = pi_Q^* g_Z + eta_1 (x) eta_1"""
    lifted = lift_form(bundle, g_Z)
    g_Q = MetricField.from_field(
        field_map(lambda g, e: g + jnp.outer(e, e), lifted, eta1, valence=(0, 2), name="g_Q"))
    g_Q.ensure_positive(probe or probe_samples(bundle.total))
    return g_Q


@dataclass(frozen=True)
class AlmostContactTriple:
    phis: Tuple[TensorField, TensorField, TensorField]
    xis: Tuple[TensorField, TensorField, TensorField]
    etas: Tuple[TensorField, TensorField, TensorField]
    g_Q: MetricField

    def structure(self, alpha: int) -> Tuple[TensorField, TensorField, TensorField]:
        if alpha not in (1, 2, 3):
            raise ValueError(f"Structure index must be 1, 2 or 3, got {alpha}")
        return self.phis[alpha - 1], self.xis[alpha - 1], self.etas[alpha - 1]

    def fundamental_form(self, alpha: int) -> TensorField:
        """g_Q(Phi_alpha (x) Id)"""
        phi = self.phis[alpha - 1]
        return field_map(lambda p, g: p.T @ g, phi, self.g_Q, valence=(0, 2), name=f"nu{alpha}")


def assemble_triple(hs: HatakeyamaStructure, phi2: TensorField, px: PsiXi, kf: KobayashiForms,
                    third: ThirdStructure, g_Q: MetricField) -> AlmostContactTriple:
    return AlmostContactTriple(
        phis=(hs.phi, phi2, third.phi),
        xis=(hs.xi, px.xi, third.xi),
        etas=(hs.eta, kf.eta2, third.eta),
        g_Q=g_Q,
    )


def almost_contact_defects(phi: TensorField, xi: TensorField, eta: TensorField) -> Dict[str, TensorField]:
    dim = phi.manifold.dim
    identity = jnp.eye(dim)
    return {
        "phi_squared": field_map(lambda p, x, e: p @ p + identity - jnp.outer(x, e), phi, xi, eta,
                                 valence=(1, 1), name="Phi^2 + Id - eta (x) xi"),
        "eta_xi": field_map(lambda x, e: e @ x - 1.0, xi, eta, valence=(0, 0), name="eta(xi) - 1"),
        "phi_xi": field_map(lambda p, x: p @ x, phi, xi, valence=(1, 0), name="Phi xi"),
        "eta_phi": field_map(lambda p, e: p.T @ e, phi, eta, valence=(0, 1), name="eta o Phi"),
    }


def metric_defects(g: TensorField, phi: TensorField, xi: TensorField, eta: TensorField) -> Dict[str, TensorField]:
    return {
        "dual": field_map(lambda m, x, e: m @ x - e, g, xi, eta, valence=(0, 1), name="g(xi, .) - eta"),
        "isometry": field_map(lambda m, p, e: p.T @ m @ p - m + jnp.outer(e, e), g, phi, eta,
                              valence=(0, 2), name="g(Phi., Phi.) - g + eta (x) eta"),
    }


def r1_defects(triple: AlmostContactTriple, alpha: int, beta: int, gamma: int) -> Dict[str, TensorField]:
    """Quaternionic relations of a 3-structure for one cyclic permutation"""
    pa, xa, ea = triple.structure(alpha)
    pb, xb, eb = triple.structure(beta)
    pc, xc, ec = triple.structure(gamma)
    tag = f"{alpha}{beta}{gamma}"
    return {
        f"phi_{tag}": field_map(lambda a, b, c, x_a, e_b: a @ b - jnp.outer(x_a, e_b) - c, pa, pb, pc, xa, eb,
                                valence=(1, 1), name=f"Phi{alpha}Phi{beta} - eta{beta} xi{alpha} - Phi{gamma}"),
        f"phi_swapped_{tag}": field_map(lambda a, b, c, x_b, e_a: b @ a - jnp.outer(x_b, e_a) + c,
                                        pa, pb, pc, xb, ea, valence=(1, 1),
                                        name=f"Phi{beta}Phi{alpha} - eta{alpha} xi{beta} + Phi{gamma}"),
        f"xi_{tag}": field_map(lambda a, b, x_a, x_b, x_c: jnp.concatenate([a @ x_b - x_c, b @ x_a + x_c]),
                               pa, pb, xa, xb, xc, valence=(1, 0), name=f"xi{gamma} relations"),
        f"eta_{tag}": field_map(lambda a, b, e_a, e_b, e_c: jnp.concatenate([b.T @ e_a - e_c, a.T @ e_b + e_c]),
                                pa, pb, ea, eb, ec, valence=(0, 1), name=f"eta{gamma} relations"),
    }


def contact_metric_defect(triple: AlmostContactTriple, alpha: int, kappa: float) -> TensorField:
    """d eta_alpha - kappa g_Q(Phi_alpha (x) Id)"""
    return field_map(lambda d, nu: d - kappa * nu, exterior_derivative(triple.etas[alpha - 1]),
                     triple.fundamental_form(alpha), valence=(0, 2), name=f"d eta{alpha} - kappa nu{alpha}")


def reeb_defect(triple: AlmostContactTriple, alpha: int) -> TensorField:
    """i_xi d eta for the structure alpha"""
    _, xi, eta = triple.structure(alpha)
    return field_map(lambda x, d: x @ d, xi, exterior_derivative(eta), valence=(0, 1), name=f"i_xi{alpha} d eta{alpha}")


@dataclass(frozen=True)
class SphereFamilyElement:
    s: Tuple[float, float, float]
    phi: TensorField
    xi: TensorField
    eta: TensorField
    nu: TensorField


def sphere_family(triple: AlmostContactTriple, s: Sequence[float]) -> SphereFamilyElement:
    a, b, c = (float(x) for x in s)
    if abs(a * a + b * b + c * c - 1.0) > UNIT_SPHERE_TOLERANCE:
        raise NotUnitSphereParameter(f"({a}, {b}, {c}) is not on the unit sphere")

    def combine(x, y, z):
        return a * x + b * y + c * z

    phi = field_map(combine, *triple.phis, valence=(1, 1), name="Phi_s")
    xi = field_map(combine, *triple.xis, valence=(1, 0), name="xi_s")
    eta = field_map(combine, *triple.etas, valence=(0, 1), name="eta_s")
    nu = field_map(lambda p, g: p.T @ g, phi, triple.g_Q, valence=(0, 2), name="nu_s")
    return SphereFamilyElement((a, b, c), phi, xi, eta, nu)


def taut_volume(element: SphereFamilyElement) -> WedgeForm:
    """eta_s ^ nu_s^k"""
    k = (element.eta.manifold.dim - 1) // 2
    return WedgeForm([element.eta] + [element.nu] * k, name="eta_s^nu_s^k")


@dataclass(frozen=True)
class SasakiConditions:
    killing: TensorField
    normality: Dict[int, TensorField]


def sasaki_conditions(triple: AlmostContactTriple, kappa: float) -> SasakiConditions:
    """Phi_1 - (2 / kappa) nabla xi_1 and the normality tensors of the second and third structures"""
    factor = 2.0 / kappa
    nabla_xi = covariant_derivative(triple.g_Q, triple.xis[0])
    killing = field_map(lambda p, n: p - factor * n, triple.phis[0], nabla_xi, valence=(1, 1),
                        name="Phi1 - kappa' nabla xi1")
    normality = {alpha: normality_tensor(*triple.structure(alpha)) for alpha in (2, 3)}
    return SasakiConditions(killing, normality)
