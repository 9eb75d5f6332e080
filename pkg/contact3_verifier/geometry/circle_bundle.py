"""The unit circle bundle Q(L), its connection form and the normal almost contact structure.

Bundle charts append the fibre angle phi to the base coordinates; phi_j = phi_i + psi_ij mod 2 pi.
"""
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import jax.numpy as jnp
import numpy as np

from ..exceptions import GaugeInconsistency, NonInvariantCurvature
from .complex_contact import HermitianWeight
from .kernel import (
    TWO_PI,
    Chart,
    ChartedManifold,
    ChartSample,
    Overlap,
    PointRef,
    Pointwise,
    SmoothMap,
    TensorField,
    drop_last_coordinate,
    exterior_derivative,
    field_map,
    nijenhuis_endo,
    probe_samples,
    pullback,
    transition_residual,
)

logger = logging.getLogger(__name__)

GAUGE_TOLERANCE = 1e-6
INVARIANCE_TOLERANCE = 1e-6
ANGLE_SLACK = 1e-12


@dataclass(frozen=True)
class CircleBundleAtlas:
    base: ChartedManifold
    total: ChartedManifold
    projection: SmoothMap
    weight: HermitianWeight

    @property
    def fiber_index(self) -> int:
        return self.base.dim


def _bundle_overlap(overlap: Overlap, psi: Callable) -> Overlap:
    def forward(q):
        x = q[:-1]
        return jnp.concatenate([overlap.forward(x), jnp.mod(q[-1:] + psi(x), TWO_PI)])

    def backward(q):
        x = overlap.backward(q[:-1])
        return jnp.concatenate([x, jnp.mod(q[-1:] - psi(x), TWO_PI)])

    periodic = tuple(overlap.periodic) + (overlap.box.dim,)
    return Overlap(overlap.source, overlap.target, forward, backward, overlap.box.extended(0.0, TWO_PI), periodic)


def _on_circle(phi: float) -> bool:
    return -ANGLE_SLACK <= float(phi) <= TWO_PI + ANGLE_SLACK


def build_bundle(atlas, w: HermitianWeight, probe: Optional[Sequence[ChartSample]] = None) -> CircleBundleAtlas:
    """Q(L) as base charts times the fibre angle"""
    base = atlas.base
    w.ensure_positive(probe or probe_samples(base))
    charts = [
        Chart(chart.chart_id, chart.box.extended(0.0, TWO_PI),
              domain=(lambda q, chart=chart: chart.contains(q[:-1]) and _on_circle(q[-1])))
        for chart in base.charts.values()
    ]
    overlaps = [_bundle_overlap(ov, w.transition_angle(*key)) for key, ov in base.overlaps.items()]
    total = ChartedManifold(f"Q({base.name})", base.dim + 1, charts, overlaps)
    projection = SmoothMap(total, base, {c: (c, lambda q: q[:-1]) for c in total.chart_ids}, name="pi_Q")
    logger.debug(f"Built circle bundle {total}")
    return CircleBundleAtlas(base, total, projection, w)


def lift_by(bundle: CircleBundleAtlas, fn: Callable, *base_fields: TensorField, valence, name: str,
            with_angle: bool = False) -> TensorField:
    """Bundle field q -> fn(base values at pi(q) [, phi])"""

    def make(chart):
        evaluators = [f.evaluator(chart) for f in base_fields]
        if with_angle:
            return lambda q: fn(*(e(q[:-1]) for e in evaluators), q[-1])
        return lambda q: fn(*(e(q[:-1]) for e in evaluators))

    if with_angle:
        rule = Pointwise(lambda q, *values: fn(*values, q[-1]), tuple(base_fields), with_coords=True,
                         project=drop_last_coordinate)
    else:
        rule = Pointwise(fn, tuple(base_fields), project=drop_last_coordinate)
    charts = [c for c in bundle.total.chart_ids if all(c in f.components for f in base_fields)]
    return TensorField(bundle.total, valence, {c: make(c) for c in charts}, name, pointwise=rule)


def lift_form(bundle: CircleBundleAtlas, form: TensorField) -> TensorField:
    """pi_Q^* of a base form; the fibre slots of the lifted components vanish"""
    pulled = pullback(bundle.projection, form)
    q = form.valence[1]

    def build():
        pad = (lambda w: jnp.pad(w, [(0, 1)] * q)) if q else (lambda w: w)
        return TensorField(bundle.total, pulled.valence, pulled.components, pulled.name,
                           pointwise=Pointwise(pad, (form,), project=drop_last_coordinate))

    return pulled.derived(("lifted",), build)


def lift_vector(V: jnp.ndarray, sigma: jnp.ndarray) -> jnp.ndarray:
    return jnp.concatenate([V, -jnp.atleast_1d(sigma @ V)])


def lift_matrix(E: jnp.ndarray, sigma: jnp.ndarray) -> jnp.ndarray:
    """Matrix of X -> (E pi_* X)^# on the bundle"""
    d = E.shape[0]
    top = jnp.concatenate([E, jnp.zeros((d, 1), dtype=E.dtype)], axis=1)
    bottom = jnp.concatenate([-(sigma @ E)[None, :], jnp.zeros((1, 1), dtype=E.dtype)], axis=1)
    return jnp.concatenate([top, bottom], axis=0)


def horizontal_lift(bundle: CircleBundleAtlas, sigma: TensorField, X, q: PointRef) -> np.ndarray:
    """X^# at q for a base tangent vector X at pi(q)"""
    bundle.total.validate(q)
    s = sigma.at(bundle.base.point(q.chart, q.coords[:-1]))
    X = np.asarray(X, dtype=float)
    return np.concatenate([X, [-float(s @ X)]])


def lift_vector_field(bundle: CircleBundleAtlas, X: TensorField, sigma: TensorField, name: str = "") -> TensorField:
    return lift_by(bundle, lift_vector, X, sigma, valence=(1, 0), name=name or f"{X.name}#")


def lift_endomorphism(bundle: CircleBundleAtlas, E: TensorField, sigma: TensorField, name: str = "") -> TensorField:
    return lift_by(bundle, lift_matrix, E, sigma, valence=(1, 1), name=name or f"{E.name}#")


def ik_connection(bundle: CircleBundleAtlas, sigma: TensorField, count: int = 10, seed: int = 0) -> TensorField:
    """eta_1 = pi^* sigma_i + d phi_i, checked to glue across bundle charts"""
    eta = lift_by(bundle, lambda s: jnp.concatenate([s, jnp.ones(1, dtype=s.dtype)]), sigma,
                  valence=(0, 1), name="eta1")
    if bundle.total.overlaps:
        residual = transition_residual(eta, bundle.total.overlap_sample(count, seed))
        if not residual <= GAUGE_TOLERANCE:
            raise GaugeInconsistency(f"eta1 disagrees across charts (residual {residual:.3e})")
    return eta


@dataclass(frozen=True)
class HatakeyamaStructure:
    phi: TensorField
    xi: TensorField
    eta: TensorField
    omega: TensorField


def fiber_field(bundle: CircleBundleAtlas) -> TensorField:
    """The generator d/dphi of the circle action"""
    unit = jnp.zeros(bundle.total.dim).at[-1].set(1.0)
    return TensorField(bundle.total, (1, 0), {c: (lambda q: unit + 0.0 * q[0]) for c in bundle.total.chart_ids},
                       name="xi1")


def hatakeyama(bundle: CircleBundleAtlas, eta1: TensorField, J: TensorField, sigma: TensorField,
               probe: Optional[Sequence[ChartSample]] = None) -> HatakeyamaStructure:
    """Phi_1 X = (J pi_* X)^#, xi_1 = d/dphi"""
    omega = exterior_derivative(sigma)
    invariance = field_map(lambda w, j: j.T @ w @ j - w, omega, J, valence=(0, 2), name="omega(J.,J.)-omega")
    for s in probe or probe_samples(bundle.base):
        residual = float(np.max(np.abs(invariance.batch(s.chart, s.coords))))
        if not residual <= INVARIANCE_TOLERANCE:
            raise NonInvariantCurvature(f"Curvature form is not J-invariant on chart {s.chart} ({residual:.3e})")
    phi = lift_endomorphism(bundle, J, sigma, name="Phi1")
    return HatakeyamaStructure(phi, fiber_field(bundle), eta1, omega)


def normality_tensor(phi: TensorField, xi: TensorField, eta: TensorField) -> TensorField:
    """[Phi, Phi] + 2 d eta (x) xi with d carrying the 1/2 factor, i.e. [Phi, Phi] + (d eta) (x) xi here"""
    return field_map(lambda N, d, x: N + jnp.einsum("i,jk->ijk", x, d),
                     nijenhuis_endo(phi), exterior_derivative(eta), xi, valence=(1, 2), name=f"N({phi.name})")
