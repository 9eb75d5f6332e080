"""Projectivized cotangent bundle P(T*C^2) = C^2 x CP^1.

Chart "0" has holomorphic coordinates (q1, lam, q2) for the covector line [1 : lam] and
theta_0 = dq1 + lam dq2; chart "1" has (q2, mu, q1) with mu = 1/lam and theta_1 = dq2 + mu dq1, so
theta_0 = lam theta_1. The weight comes from the flat Hermitian metric |p|^2 on T*C^2. The cone maps
onto the punctured cotangent bundle, p = z (1, lam), where vartheta is the Liouville form.
"""
import math

import jax.numpy as jnp

from ..geometry.complex_contact import HermitianWeight, HolomorphicContactAtlas, holomorphic_overlap, real_one_form, to_complex, to_real
from ..geometry.kernel import Box, Chart, ChartedManifold, TensorField, standard_complex_structure
from .model_bundle import KAHLER_EINSTEIN_ONLY, ModelBundle, TautologicalTarget

FIBRE_HALF_WIDTH = 1.5 / math.sqrt(2.0)


def _swap(w: jnp.ndarray) -> jnp.ndarray:
    """(q_a, lam, q_b) -> (q_b, 1/lam, q_a)"""
    return jnp.stack([w[2], 1.0 / w[1], w[0]])


def _chart_box() -> Box:
    lower = (-1.0, -FIBRE_HALF_WIDTH, -1.0, -1.0, -FIBRE_HALF_WIDTH, -1.0)
    return Box(lower, tuple(-x for x in lower))


def _overlap_box() -> Box:
    return Box((-1.0, 0.5, -1.0, -1.0, -0.5, -1.0), (1.0, 1.0, 1.0, 1.0, 0.5, 1.0))


def contact_coefficients(w: jnp.ndarray) -> jnp.ndarray:
    return jnp.stack([jnp.ones((), dtype=w.dtype), jnp.zeros((), dtype=w.dtype), w[1]])


def weight(w: jnp.ndarray) -> jnp.ndarray:
    return 1.0 + jnp.abs(w[1]) ** 2


def metric_hint(w: jnp.ndarray) -> jnp.ndarray:
    """Euclidean on the base, Fubini-Study on the fibre"""
    return jnp.diag(jnp.stack([1.0 + 0.0j, (1.0 + 0.0j) / weight(w) ** 2, 1.0 + 0.0j]))


def _cone_map(first: int):
    """Cone chart -> T*C^2 coordinates (q1, q2, p1, p2)"""

    def value(c):
        w, phi, t = to_complex(c[:6], 3), c[6], c[7]
        z = jnp.exp(t + 1j * phi) / jnp.sqrt(weight(w))
        if first == 0:
            q1, q2, p1, p2 = w[0], w[2], z, w[1] * z
        else:
            q1, q2, p1, p2 = w[2], w[0], w[1] * z, z
        return to_real(jnp.stack([q1, q2, p1, p2]))

    return value


def _liouville(x: jnp.ndarray) -> jnp.ndarray:
    """p1 dq1 + p2 dq2"""
    z = to_complex(x, 4)
    return real_one_form(jnp.stack([z[2], z[3], 0.0 * z[0], 0.0 * z[0]]))


def build_cotangent_model() -> ModelBundle:
    m = 3
    charts = [Chart("0", _chart_box()), Chart("1", _chart_box())]
    overlaps = [holomorphic_overlap("0", "1", forward=_swap, backward=_swap, m=m, box=_overlap_box())]
    base = ChartedManifold("P(T*C2)", 2 * m, charts, overlaps)
    atlas = HolomorphicContactAtlas(
        base, 1, {"0": contact_coefficients, "1": contact_coefficients}, {("0", "1"): lambda w: w[1]})
    w = HermitianWeight(atlas, {"0": weight, "1": weight})

    cotangent = ChartedManifold("T*C2", 8, [Chart("T", Box.cube(8, 4.0))])
    target = TautologicalTarget(
        manifold=cotangent,
        chart_maps={"0": _cone_map(0), "1": _cone_map(1)},
        target_chart="T",
        liouville=TensorField(cotangent, (0, 1), {"T": _liouville}, name="Lambda"),
        complex_structure=standard_complex_structure(4),
    )
    return ModelBundle(
        name="cotangent",
        description="P(T*C^2) with the tautological contact form and the flat cotangent metric",
        source="unit cotangent bundles remark, tautological form Lambda",
        atlas=atlas,
        weight=w,
        metric_hint={"0": metric_hint, "1": metric_hint},
        informational=KAHLER_EINSTEIN_ONLY,
        target=target,
    )
