"""CP^3 as the twistor space of S^4.

The contact form comes from Theta = z0 dz1 - z1 dz0 + z2 dz3 - z3 dz2 on C^4: in the affine chart
z_k = 1 with section s_k(w), theta_k = s_k^* Theta, so theta_k = f_kl theta_l with f_kl = zeta_l^2,
zeta = s_k(w). The weight of L = O(-2) is h_k = (1 + |w|^2)^2 / 4.
"""
import itertools
import math
from typing import List

import jax.numpy as jnp

from ..geometry.complex_contact import HermitianWeight, HolomorphicContactAtlas, TripleOverlap, holomorphic_overlap
from ..geometry.kernel import Box, Chart, ChartedManifold
from .model_bundle import ModelBundle

CHARTS = 4
AFFINE_HALF_WIDTH = 1.5 / math.sqrt(6.0)
# the constant that makes the curvature form the Kahler form of g_Z
WEIGHT_NORMALIZATION = 0.25

SYMPLECTIC = jnp.array([
    [0.0, 1.0, 0.0, 0.0],
    [-1.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
    [0.0, 0.0, -1.0, 0.0],
])


def _others(k: int) -> List[int]:
    return [a for a in range(CHARTS) if a != k]


def section(k: int, w: jnp.ndarray) -> jnp.ndarray:
    """Homogeneous coordinates with z_k = 1"""
    return jnp.insert(w, k, 1.0 + 0.0j)


def affine(k: int, z: jnp.ndarray) -> jnp.ndarray:
    scaled = z / z[k]
    return scaled[jnp.array(_others(k))]


def contact_coefficients(k: int, w: jnp.ndarray) -> jnp.ndarray:
    return (section(k, w) @ SYMPLECTIC)[jnp.array(_others(k))]


def cocycle(k: int, l: int, w: jnp.ndarray) -> jnp.ndarray:
    return section(k, w)[l] ** 2


def weight(w: jnp.ndarray) -> jnp.ndarray:
    return WEIGHT_NORMALIZATION * (1.0 + jnp.sum(jnp.abs(w) ** 2)) ** 2


def fubini_study(w: jnp.ndarray) -> jnp.ndarray:
    r = 1.0 + jnp.sum(jnp.abs(w) ** 2)
    return (r * jnp.eye(w.shape[0]) - jnp.outer(w, jnp.conj(w))) / r ** 2


def _overlap_box(k: int, targets: List[int]) -> Box:
    """Chart k region where the homogeneous coordinates in `targets` have real part in [0.5, 1]"""
    positions = [_others(k).index(l) for l in targets]
    lower, upper = [-0.5] * 6, [0.5] * 6
    for p in positions:
        lower[p], upper[p] = 0.5, 1.0
    return Box(tuple(lower), tuple(upper))


def build_projective_twistor() -> ModelBundle:
    m = 3
    charts = [Chart(str(k), Box.cube(2 * m, AFFINE_HALF_WIDTH)) for k in range(CHARTS)]
    overlaps = []
    cocycles = {}
    for k, l in itertools.combinations(range(CHARTS), 2):
        overlaps.append(holomorphic_overlap(
            str(k), str(l),
            forward=lambda w, k=k, l=l: affine(l, section(k, w)),
            backward=lambda w, k=k, l=l: affine(k, section(l, w)),
            m=m,
            box=_overlap_box(k, [l]),
        ))
        cocycles[(str(k), str(l))] = lambda w, k=k, l=l: cocycle(k, l, w)
    triples = [TripleOverlap((str(i), str(j), str(k)), _overlap_box(i, [j, k]))
               for i, j, k in itertools.combinations(range(CHARTS), 3)]
    base = ChartedManifold("CP3", 2 * m, charts, overlaps)
    atlas = HolomorphicContactAtlas(
        base, 1, {str(k): (lambda w, k=k: contact_coefficients(k, w)) for k in range(CHARTS)}, cocycles, triples)
    w = HermitianWeight(atlas, {str(k): weight for k in range(CHARTS)})
    return ModelBundle(
        name="cp3",
        description="CP^3 = twistor space of S^4, Fubini-Study weight on O(-2); Q = RP^7",
        source="twistor space example, Fano contact structure",
        atlas=atlas,
        weight=w,
        metric_hint={str(k): fubini_study for k in range(CHARTS)},
    )
