"""The cone Q x R with its three complex structures, metrics and holomorphic symplectic form."""
import itertools
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import jax
import jax.numpy as jnp
import numpy as np

from .circle_bundle import CircleBundleAtlas
from .complex_contact import HermitianWeight, HolomorphicContactAtlas
from .kernel import (
    Chart,
    ChartedManifold,
    ChartSample,
    MetricField,
    Overlap,
    Pointwise,
    SmoothMap,
    TensorField,
    WedgeForm,
    drop_last_coordinate,
    exterior_derivative,
    field_map,
    probe_samples,
)
from .triple_structure import AlmostContactTriple

logger = logging.getLogger(__name__)

T_RANGE = (-0.5, 0.5)


@dataclass(frozen=True)
class ConeManifold:
    """Q x R with t = log of the fibre norm; coordinates (base, phi, t)"""

    bundle: CircleBundleAtlas
    total: ChartedManifold
    projection: SmoothMap


def _cone_overlap(overlap: Overlap, t_range) -> Overlap:
    return Overlap(
        overlap.source,
        overlap.target,
        forward=lambda c: jnp.concatenate([overlap.forward(c[:-1]), c[-1:]]),
        backward=lambda c: jnp.concatenate([overlap.backward(c[:-1]), c[-1:]]),
        box=overlap.box.extended(*t_range),
        periodic=overlap.periodic,
    )


def build_cone(bundle: CircleBundleAtlas, t_range: Tuple[float, float] = T_RANGE) -> ConeManifold:
    Q = bundle.total
    charts = [Chart(chart.chart_id, chart.box.extended(*t_range), domain=(lambda c, chart=chart: chart.contains(c[:-1])))
              for chart in Q.charts.values()]
    overlaps = [_cone_overlap(ov, t_range) for ov in Q.overlaps.values()]
    total = ChartedManifold(f"U({bundle.base.name})", Q.dim + 1, charts, overlaps)
    projection = SmoothMap(total, Q, {c: (c, lambda c_: c_[:-1]) for c in total.chart_ids}, name="pi_U")
    return ConeManifold(bundle, total, projection)


def extend(cone: ConeManifold, fn: Callable, *fields: TensorField, valence, name: str) -> TensorField:
    """Cone field c -> fn(values on Q at c[:-1], t)"""

    def make(chart):
        evaluators = [f.evaluator(chart) for f in fields]
        return lambda c: fn(*(e(c[:-1]) for e in evaluators), c[-1])

    rule = Pointwise(lambda c, *values: fn(*values, c[-1]), tuple(fields), with_coords=True,
                     project=drop_last_coordinate)
    charts = [c for c in cone.total.chart_ids if all(c in f.components for f in fields)]
    return TensorField(cone.total, valence, {c: make(c) for c in charts}, name, pointwise=rule)


def cone_matrix(phi: jnp.ndarray, xi: jnp.ndarray, eta: jnp.ndarray) -> jnp.ndarray:
    """I X = Phi X - eta(X) d/dt, I d/dt = xi"""
    top = jnp.concatenate([phi, xi[:, None]], axis=1)
    bottom = jnp.concatenate([-eta[None, :], jnp.zeros((1, 1), dtype=phi.dtype)], axis=1)
    return jnp.concatenate([top, bottom], axis=0)


def cone_complex_structures(cone: ConeManifold, triple: AlmostContactTriple) -> Tuple[TensorField, ...]:
    return tuple(
        extend(cone, lambda p, x, e, t: cone_matrix(p, x, e), *triple.structure(alpha), valence=(1, 1),
               name=f"I{alpha}")
        for alpha in (1, 2, 3)
    )


def _with_time(g: jnp.ndarray) -> jnp.ndarray:
    d = g.shape[0]
    out = jnp.zeros((d + 1, d + 1), dtype=g.dtype)
    return out.at[:d, :d].set(g).at[d, d].set(1.0)


def cone_metrics(cone: ConeManifold, g_Q: TensorField,
                 probe: Optional[Sequence[ChartSample]] = None) -> Tuple[MetricField, MetricField]:
    """g_C = g_Q + dt (x) dt and g_U = e^t g_C"""
    g_C = MetricField.from_field(extend(cone, lambda g, t: _with_time(g), g_Q, valence=(0, 2), name="g_C"))
    g_U = MetricField.from_field(extend(cone, lambda g, t: jnp.exp(t) * _with_time(g), g_Q, valence=(0, 2), name="g_U"))
    samples = probe or probe_samples(cone.total)
    g_C.ensure_positive(samples)
    g_U.ensure_positive(samples)
    return g_C, g_U


def fundamental_forms(I: Sequence[TensorField], g_C: TensorField) -> Tuple[Tuple[TensorField, ...], Tuple[TensorField, ...]]:
    """Theta_alpha = g_C(I_alpha (x) Id) and omega_alpha = e^t Theta_alpha, alpha = 1, 2, 3"""
    thetas = tuple(field_map(lambda i, g: i.T @ g, I_a, g_C, valence=(0, 2), name=f"Theta{k}")
                   for k, I_a in enumerate(I, start=1))
    omegas = tuple(field_map(lambda c, th: jnp.exp(c[-1]) * th, theta, valence=(0, 2), name=f"omega{k}",
                             with_coords=True)
                   for k, theta in enumerate(thetas, start=1))
    return thetas, omegas


def expected_theta(cone: ConeManifold, eta: TensorField, kappa: float) -> TensorField:
    """d eta / kappa + dt ^ eta on the cone"""

    def value(d, e, t):
        n = e.shape[0]
        out = jnp.zeros((n + 1, n + 1), dtype=d.dtype)
        out = out.at[:n, :n].set(d / kappa)
        return out.at[n, :n].set(e).at[:n, n].set(-e)

    return extend(cone, value, exterior_derivative(eta), eta, valence=(0, 2), name=f"d{eta.name}/kappa + dt^{eta.name}")


def tautological_form(cone: ConeManifold, atlas: HolomorphicContactAtlas, w: HermitianWeight) -> TensorField:
    """vartheta = z_i pi^* theta_i with z_i = e^(t + i phi) / sqrt(h_i)"""

    def make(chart):
        theta, h = atlas.theta.evaluator(chart), w.h.evaluator(chart)

        def value(c):
            x, phi, t = c[:-2], c[-2], c[-1]
            z = jnp.exp(t + 1j * phi) / jnp.sqrt(h(x))
            return jnp.concatenate([z * theta(x), jnp.zeros(2, dtype=jnp.complex128)])

        return value

    return TensorField(cone.total, (0, 1), {c: make(c) for c in cone.total.chart_ids if c in atlas.theta.components},
                       name="vartheta")


def fibre_coordinate(cone: ConeManifold, w: HermitianWeight) -> TensorField:
    """z_i on the cone"""

    def make(chart):
        h = w.h.evaluator(chart)
        return lambda c: jnp.exp(c[-1] + 1j * c[-2]) / jnp.sqrt(h(c[:-2]))

    return TensorField(cone.total, (0, 0), {c: make(c) for c in w.h.components}, name="z")


@dataclass(frozen=True)
class HyperhermitianData:
    I: Tuple[TensorField, TensorField, TensorField]
    g_C: MetricField
    g_U: MetricField
    thetas: Tuple[TensorField, TensorField, TensorField]
    omegas: Tuple[TensorField, TensorField, TensorField]
    vartheta: TensorField
    upsilon: TensorField

    def kahler_form(self, alpha: int) -> TensorField:
        """g_U(I_alpha (x) Id)"""
        return field_map(lambda i, g: i.T @ g, self.I[alpha - 1], self.g_U, valence=(0, 2), name=f"g_U(I{alpha}.,.)")


def holo_symplectic(omegas: Sequence[TensorField]) -> TensorField:
    """Upsilon = omega_2 + sqrt(-1) omega_3"""
    return field_map(lambda a, b: a + 1j * b, omegas[1], omegas[2], valence=(0, 2), name="Upsilon")


def upsilon_power_magnitude(upsilon: TensorField, n: int, samples: Sequence[ChartSample]) -> float:
    """min over points of the largest |coefficient| of Upsilon^(n+1)"""
    power = WedgeForm([upsilon] * (n + 1), name="Upsilon^(n+1)")
    index_sets = list(itertools.combinations(range(upsilon.manifold.dim), 2 * (n + 1)))
    worst = np.inf
    for s in samples:
        coefficients = np.abs(power.coefficients(s.chart, s.coords, index_sets))
        worst = min(worst, float(np.min(np.max(coefficients, axis=1))))
    return worst


def sphere_complex_structure(I: Sequence[TensorField], s: Sequence[float]) -> TensorField:
    a, b, c = (float(x) for x in s)
    return field_map(lambda x, y, z: a * x + b * y + c * z, *I, valence=(1, 1), name="I_s")


def map_holomorphicity_defect(f: SmoothMap, I: TensorField, J_target: jnp.ndarray) -> TensorField:
    """df o I - J o df for a map into a manifold with constant complex structure J_target"""

    def make(chart):
        _, fn = f.charts[chart]
        jac = jax.jacfwd(fn)
        ev = I.evaluator(chart)
        return lambda c: jac(c) @ ev(c) - J_target @ jac(c)

    return TensorField(f.source, (1, 1), {c: make(c) for c in f.charts if c in I.components}, name=f"d{f.name} I - J d{f.name}")


def build_hyperhermitian(cone: ConeManifold, triple: AlmostContactTriple, atlas: HolomorphicContactAtlas,
                         w: HermitianWeight, probe: Optional[Sequence[ChartSample]] = None) -> HyperhermitianData:
    I = cone_complex_structures(cone, triple)
    g_C, g_U = cone_metrics(cone, triple.g_Q, probe)
    thetas, omegas = fundamental_forms(I, g_C)
    vartheta = tautological_form(cone, atlas, w)
    return HyperhermitianData(I, g_C, g_U, thetas, omegas, vartheta, holo_symplectic(omegas))
