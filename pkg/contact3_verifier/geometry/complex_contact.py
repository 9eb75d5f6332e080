"""Holomorphic contact atlases, Hermitian weights and the structures built from them.

Holomorphic charts use real coordinates (x_0..x_{m-1}, y_0..y_{m-1}) with z_k = x_k + i y_k and
J d/dx_k = d/dy_k. A holomorphic 1-form sum c_k dz_k has real components (c, i c); a (2,0)-form
with coefficient matrix W has real components [[W, iW], [iW, -W]].
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import jax
import jax.numpy as jnp
import numpy as np

from ..exceptions import (
    DegenerateHorizontal,
    DegenerateVerticalDistribution,
    InvalidWeight,
    UnknownChart,
    UnsupportedDimension,
)
from .kernel import (
    Box,
    ChartedManifold,
    ChartSample,
    ComplexStructureField,
    MetricField,
    Overlap,
    TensorField,
    WedgeForm,
    covariance_residual,
    exterior_derivative,
    field_map,
    probe_samples,
    standard_complex_structure,
    transform_components,
    wedge,
)

logger = logging.getLogger(__name__)

ComplexFn = Callable[[jnp.ndarray], jnp.ndarray]

NULL_SPACE_TOLERANCE = 1e-6
SQRT_ITERATIONS = 24
SQRT_TOLERANCE = 1e-8


def to_complex(x: jnp.ndarray, m: int) -> jnp.ndarray:
    return x[:m] + 1j * x[m:2 * m]


def to_real(z: jnp.ndarray) -> jnp.ndarray:
    return jnp.concatenate([jnp.real(z), jnp.imag(z)])


def real_one_form(c: jnp.ndarray) -> jnp.ndarray:
    return jnp.concatenate([c, 1j * c])


def real_two_form(W: jnp.ndarray) -> jnp.ndarray:
    return jnp.block([[W, 1j * W], [1j * W, -W]])


def real_hermitian(P: jnp.ndarray) -> jnp.ndarray:
    """Real Gram matrix of Re(X^* P Y)"""
    return jnp.block([[jnp.real(P), -jnp.imag(P)], [jnp.imag(P), jnp.real(P)]])


def real_antilinear(K: jnp.ndarray) -> jnp.ndarray:
    """Real matrix of X -> K conj(X)"""
    return jnp.block([[jnp.real(K), jnp.imag(K)], [jnp.imag(K), -jnp.real(K)]])


def holomorphic_jacobian(real_jacobian: jnp.ndarray, m: int) -> jnp.ndarray:
    return real_jacobian[:m, :m] + 1j * real_jacobian[m:, :m]


def holomorphic_overlap(source: str, target: str, forward: ComplexFn, backward: ComplexFn, m: int,
                        box: Box) -> Overlap:
    """Real transition data of a biholomorphic change of chart"""
    return Overlap(
        source=source,
        target=target,
        forward=lambda x: to_real(forward(to_complex(x, m))),
        backward=lambda y: to_real(backward(to_complex(y, m))),
        box=box,
    )


@dataclass(frozen=True)
class TripleOverlap:
    """Three charts with a common region, `box` in coordinates of the first"""

    charts: Tuple[str, str, str]
    box: Box


class HolomorphicContactAtlas:
    """Local holomorphic contact forms theta_i glued by theta_i = f_ij theta_j"""

    def __init__(self, base: ChartedManifold, n: int, theta: Dict[str, ComplexFn],
                 cocycles: Dict[Tuple[str, str], ComplexFn], triples: Sequence[TripleOverlap] = ()):
        if n < 1:
            raise UnsupportedDimension(f"Complex contact dimension needs n >= 1, got {n}")
        if base.dim != 2 * (2 * n + 1):
            raise UnsupportedDimension(f"Base of real dimension {base.dim} cannot carry n = {n}")
        missing = [key for key in base.overlaps if key not in cocycles]
        if missing:
            raise UnknownChart(f"No cocycle given for overlaps {missing}")
        self.base = base
        self.n = n
        self.m = 2 * n + 1
        self.theta_coefficients = dict(theta)
        self.cocycles = dict(cocycles)
        self.triples = list(triples)
        self.logger = logging.getLogger(__name__)

        m = self.m
        self.J = ComplexStructureField(
            base,
            {c: (lambda x, J=jnp.asarray(standard_complex_structure(m)): J + 0.0 * x[0]) for c in base.chart_ids},
            name="J",
            constant_in_holomorphic_charts=True,
        )
        self.theta = TensorField(
            base, (0, 1),
            {c: (lambda x, fn=fn: real_one_form(fn(to_complex(x, m)))) for c, fn in self.theta_coefficients.items()},
            name="theta",
        )

    def cocycle(self, source: str, target: str) -> Callable[[jnp.ndarray], jnp.ndarray]:
        try:
            fn = self.cocycles[(source, target)]
        except KeyError:
            raise UnknownChart(f"No cocycle f_{source}{target}") from None
        return lambda x: fn(to_complex(x, self.m))

    def contact_volume(self) -> WedgeForm:
        """theta ^ (d theta)^n, a complex (2n+1)-form"""
        return WedgeForm([self.theta] + [exterior_derivative(self.theta)] * self.n, name="theta^dtheta^n")

    def min_contact_volume(self, samples: Sequence[ChartSample]) -> float:
        """Smallest |dz_0 ^ ... ^ dz_{m-1} coefficient| of theta ^ (d theta)^n"""
        volume = self.contact_volume()
        indices = [tuple(range(self.m))]
        return min(float(np.min(np.abs(volume.coefficients(s.chart, s.coords, indices)))) for s in samples)


class HermitianWeight:
    """Local weights h_i with h_j = h_i |f_ij|^-2 and the transition angles psi_ij = arg f_ij"""

    def __init__(self, atlas: HolomorphicContactAtlas, h: Dict[str, Callable[[jnp.ndarray], jnp.ndarray]]):
        self.atlas = atlas
        m = atlas.m
        self.h = TensorField(atlas.base, (0, 0),
                             {c: (lambda x, fn=fn: jnp.real(fn(to_complex(x, m)))) for c, fn in h.items()},
                             name="h")
        self.log_h = field_map(jnp.log, self.h, valence=(0, 0), name="log h")
        self.psi: Dict[Tuple[str, str], Callable[[jnp.ndarray], jnp.ndarray]] = {
            key: self._branch(key, overlap) for key, overlap in atlas.base.overlaps.items()
        }

    def _branch(self, key: Tuple[str, str], overlap: Overlap):
        # continuous branch of arg f_ij, |psi| minimal at the centre of the overlap box
        f = self.atlas.cocycle(*key)
        f0 = complex(np.asarray(jax.jit(f)(jnp.asarray(overlap.box.center()))))
        anchor = math.atan2(f0.imag, f0.real)
        return lambda x: anchor + jnp.angle(f(x) * np.conj(f0))

    def transition_angle(self, source: str, target: str):
        try:
            return self.psi[(source, target)]
        except KeyError:
            raise UnknownChart(f"No transition angle psi_{source}{target}") from None

    def ensure_positive(self, samples: Sequence[ChartSample]) -> None:
        for s in samples:
            values = self.h.batch(s.chart, s.coords)
            if not np.all(values > 0):
                raise InvalidWeight(f"Weight h is not positive on chart {s.chart} (min {values.min():.3e})")


@dataclass
class AtlasValidation:
    points: int = 0
    cocycle: float = 0.0
    cocycle_identity: float = 0.0
    weight: float = 0.0
    round_trip: float = 0.0
    power_consistency: float = 0.0
    min_contact_volume: float = 0.0
    details: Dict[str, float] = field(default_factory=dict)

    def failures(self, threshold: float) -> List[str]:
        names = [name for name in ("cocycle", "cocycle_identity", "weight", "round_trip", "power_consistency")
                 if not getattr(self, name) <= threshold]
        if not self.min_contact_volume > 0:
            names.append("min_contact_volume")
        return names


def _cocycle_defects(atlas: HolomorphicContactAtlas, overlap: Overlap, coords: np.ndarray) -> np.ndarray:
    theta_i = atlas.theta.evaluator(overlap.source)
    theta_j = atlas.theta.evaluator(overlap.target)
    f = atlas.cocycle(overlap.source, overlap.target)
    jacobian = jax.jacfwd(overlap.forward)

    def defect(x):
        # theta_j pulled back to chart i, scaled by f_ij
        pulled = transform_components(theta_j(overlap.forward(x)), jnp.linalg.inv(jacobian(x)), (0, 1))
        return theta_i(x) - f(x) * pulled

    return np.abs(np.asarray(jax.jit(jax.vmap(defect))(jnp.asarray(coords))))


def _power_defects(atlas: HolomorphicContactAtlas, overlap: Overlap, coords: np.ndarray) -> np.ndarray:
    """f_ij^(n+1) det(dw_j/dw_i) is locally constant: E^(n+1) and det(TZ) share a cocycle"""
    f = atlas.cocycle(overlap.source, overlap.target)
    jacobian = jax.jacfwd(overlap.forward)
    m, n = atlas.m, atlas.n

    def value(x):
        return f(x) ** (n + 1) * jnp.linalg.det(holomorphic_jacobian(jacobian(x), m))

    compiled = jax.jit(jax.vmap(value))
    reference = np.asarray(compiled(jnp.asarray(overlap.box.center()[None, :])))[0]
    return np.abs(np.asarray(compiled(jnp.asarray(coords))) - reference) / max(abs(reference), 1e-300)


def validate_atlas(atlas: HolomorphicContactAtlas, w: HermitianWeight, count: int = 20, seed: int = 0) -> AtlasValidation:
    """Residuals of the atlas axioms; failures are reported, never raised"""
    base = atlas.base
    report = AtlasValidation()
    samples = base.sample(count, seed)
    report.points = sum(s.count for s in samples)
    report.min_contact_volume = atlas.min_contact_volume(samples)
    report.round_trip = base.round_trip_residual(count, seed)

    for s in base.overlap_sample(count, seed):
        ov = s.overlap
        key = f"{ov.source}->{ov.target}"
        cocycle = float(np.max(_cocycle_defects(atlas, ov, s.coords)))
        report.details[f"cocycle {key}"] = cocycle
        report.cocycle = max(report.cocycle, cocycle)

        h_i, h_j = w.h.evaluator(ov.source), w.h.evaluator(ov.target)
        f = atlas.cocycle(ov.source, ov.target)
        weight_defect = jax.jit(jax.vmap(lambda x: h_j(ov.forward(x)) - h_i(x) / jnp.abs(f(x)) ** 2))
        report.weight = max(report.weight, float(np.max(np.abs(np.asarray(weight_defect(jnp.asarray(s.coords)))))))
        report.power_consistency = max(report.power_consistency, float(np.max(_power_defects(atlas, ov, s.coords))))
        report.points += s.count

    for index, triple in enumerate(atlas.triples):
        i, j, k = triple.charts
        forward = base.overlap(i, j).forward
        f_ij, f_jk, f_ik = atlas.cocycle(i, j), atlas.cocycle(j, k), atlas.cocycle(i, k)
        defect = jax.jit(jax.vmap(lambda x: f_ij(x) * f_jk(forward(x)) - f_ik(x)))
        coords = triple.box.sample(np.random.default_rng([seed, 2000 + index]), count)
        report.cocycle_identity = max(report.cocycle_identity,
                                      float(np.max(np.abs(np.asarray(defect(jnp.asarray(coords)))))))

    logger.debug(f"Atlas validation for {base.name}: {report}")
    return report


@dataclass(frozen=True)
class NormalizedContactData:
    varpi: TensorField
    u: TensorField
    v: TensorField


def normalize(atlas: HolomorphicContactAtlas, w: HermitianWeight,
              probe: Optional[Sequence[ChartSample]] = None) -> NormalizedContactData:
    w.ensure_positive(probe or probe_samples(atlas.base))
    varpi = field_map(lambda theta, h: theta / jnp.sqrt(h), atlas.theta, w.h, valence=(0, 1), name="varpi")
    u = field_map(jnp.real, varpi, valence=(0, 1), name="u")
    v = field_map(lambda c: -jnp.imag(c), varpi, valence=(0, 1), name="v")
    return NormalizedContactData(varpi, u, v)


def gauge(w: HermitianWeight, probe: Optional[Sequence[ChartSample]] = None) -> TensorField:
    """sigma_i = -(1/2) J^T d log h_i, the real form with sqrt(-1) sigma = (1/2)(d - dbar) log h"""
    w.ensure_positive(probe or probe_samples(w.atlas.base))
    J = jnp.asarray(standard_complex_structure(w.atlas.m))
    return field_map(lambda dlog: -0.5 * J.T @ dlog, exterior_derivative(w.log_h), valence=(0, 1), name="sigma")


def chern_connection(w: HermitianWeight) -> TensorField:
    """Connection form d' log h of the Chern connection, complex valued in real coordinates.

    With d' f = (1/2)(df - sqrt(-1) J^T df) its imaginary part is sigma and its curvature
    d(d' log h) = dbar d' log h.
    """
    J = jnp.asarray(standard_complex_structure(w.atlas.m))
    return field_map(lambda dlog: 0.5 * (dlog - 1j * J.T @ dlog), exterior_derivative(w.log_h), valence=(0, 1),
                     name="A")


def gauge_transition_residual(w: HermitianWeight, sigma: TensorField, count: int = 20, seed: int = 0) -> float:
    """sigma_j = sigma_i - d psi_ij on overlaps"""
    samples = w.atlas.base.overlap_sample(count, seed)
    return covariance_residual(
        sigma, [sigma], samples,
        lambda ov: (lambda x, s, psi=jax.grad(w.transition_angle(ov.source, ov.target)), ov=ov:
                    s - transform_components(psi(x), jax.jacfwd(ov.forward)(x), (0, 1))),
    )


@dataclass(frozen=True)
class OmegaStructure:
    sigma: TensorField
    omega: TensorField
    G_hat: TensorField
    H_hat: TensorField

    def holomorphic_part(self) -> TensorField:
        """The (2,0) coefficient matrix W of Omega"""
        m = self.omega.manifold.dim // 2
        return field_map(lambda O: O[:m, :m], self.omega, valence=(0, 0), name="W")


def omega_structure(nd: NormalizedContactData, sigma: TensorField) -> OmegaStructure:
    omega = field_map(lambda d, s: d - 1j * s, exterior_derivative(nd.varpi), wedge(sigma, nd.varpi),
                      valence=(0, 2), name="Omega")
    G_hat = field_map(jnp.real, omega, valence=(0, 2), name="G_hat")
    H_hat = field_map(lambda O: -jnp.imag(O), omega, valence=(0, 2), name="H_hat")
    return OmegaStructure(sigma, omega, G_hat, H_hat)


@dataclass(frozen=True)
class VerticalFrame:
    A: TensorField
    B: TensorField


def _vertical_frame(G, u, v):
    N = G.T @ G + jnp.outer(u, u) + jnp.outer(v, v)
    return jnp.linalg.solve(N, u), jnp.linalg.solve(N, v)


def _check_null_space(G_hat: TensorField, samples: Sequence[ChartSample]) -> None:
    for s in samples:
        singular = np.linalg.svd(G_hat.batch(s.chart, s.coords), compute_uv=False)
        scale = singular[:, 0]
        ordered = np.sort(singular, axis=1)
        if np.any(ordered[:, 1] > NULL_SPACE_TOLERANCE * scale) or np.any(ordered[:, 2] <= NULL_SPACE_TOLERANCE * scale):
            raise DegenerateVerticalDistribution(f"Null space of G_hat is not 2-dimensional on chart {s.chart}")


def vertical_frame(os: OmegaStructure, nd: NormalizedContactData,
                   probe: Optional[Sequence[ChartSample]] = None) -> VerticalFrame:
    """(A, B) spanning ker G_hat with u(A) = v(B) = 1 and u(B) = v(A) = 0"""
    _check_null_space(os.G_hat, probe or probe_samples(os.G_hat.manifold))
    A = field_map(lambda G, u, v: _vertical_frame(G, u, v)[0], os.G_hat, nd.u, nd.v, valence=(1, 0), name="A")
    B = field_map(lambda G, u, v: _vertical_frame(G, u, v)[1], os.G_hat, nd.u, nd.v, valence=(1, 0), name="B")
    return VerticalFrame(A, B)


def vertical_subspace_angle(frame: VerticalFrame, count: int = 20, seed: int = 0) -> float:
    """Largest principal angle between span(A_i, B_i) and span(A_j, B_j) over overlap samples"""
    worst = 0.0
    for s in frame.A.manifold.overlap_sample(count, seed):
        ov = s.overlap
        A_i, B_i = frame.A.evaluator(ov.source), frame.B.evaluator(ov.source)
        A_j, B_j = frame.A.evaluator(ov.target), frame.B.evaluator(ov.target)
        jacobian = jax.jacfwd(ov.forward)

        def bases(x):
            jac, y = jacobian(x), ov.forward(x)
            return jnp.stack([jac @ A_i(x), jac @ B_i(x)], axis=1), jnp.stack([A_j(y), B_j(y)], axis=1)

        first, second = jax.jit(jax.vmap(bases))(jnp.asarray(s.coords))
        for left, right in zip(np.asarray(first), np.asarray(second)):
            q_left, _ = np.linalg.qr(left)
            q_right, _ = np.linalg.qr(right)
            cosines = np.clip(np.linalg.svd(q_left.T @ q_right, compute_uv=False), -1.0, 1.0)
            worst = max(worst, float(np.max(np.arccos(cosines))))
    return worst


def matrix_sqrt(M: jnp.ndarray, iterations: int = SQRT_ITERATIONS) -> jnp.ndarray:
    """Principal square root by the coupled Denman-Beavers iteration"""

    def body(_, carry):
        Y, Z = carry
        return 0.5 * (Y + jnp.linalg.inv(Z)), 0.5 * (Z + jnp.linalg.inv(Y))

    Y, _ = jax.lax.fori_loop(0, iterations, body, (M, jnp.eye(M.shape[0], dtype=M.dtype)))
    return Y


def sqrt_residual(M: jnp.ndarray, Y: jnp.ndarray) -> jnp.ndarray:
    """max |Y Y - M| relative to max(1, max |M|)"""
    return jnp.max(jnp.abs(Y @ Y - M)) / jnp.maximum(1.0, jnp.max(jnp.abs(M)))


def _horizontal_operator(W, a, A_c, P_ref):
    """(P0, M) with M = -P0^-1 conj(W) conj(P0)^-1 W + A_c a^T"""
    m = a.shape[0]
    proj = jnp.eye(m) - jnp.outer(A_c, a)
    P0 = jnp.outer(jnp.conj(a), a) + proj.conj().T @ P_ref @ proj
    P0_inv = jnp.linalg.inv(P0)
    T = P0_inv @ jnp.conj(W) @ jnp.conj(P0_inv) @ W
    return P0, -T + jnp.outer(A_c, a)


def associated_hermitian(W, a, A_c, P_ref):
    """Hermitian matrix P of g_Z with G^2 = -Id + u (x) A + v (x) B and P A = conj(a)"""
    P0, M = _horizontal_operator(W, a, A_c, P_ref)
    P = P0 @ matrix_sqrt(M)
    return 0.5 * (P + P.conj().T)


@dataclass(frozen=True)
class AssociatedMetricData:
    g_Z: MetricField
    G: TensorField
    H: TensorField
    hermitian: TensorField


def associated_metric(atlas: HolomorphicContactAtlas, nd: NormalizedContactData, os: OmegaStructure,
                      vf: VerticalFrame, hint: Optional[Dict[str, ComplexFn]] = None,
                      probe: Optional[Sequence[ChartSample]] = None) -> AssociatedMetricData:
    """The associated metric for which the adapted frame (A, -JA, e_k, J e_k) is orthonormal.

    `hint` is a global Hermitian metric on the base, one matrix function of z per chart; its
    restriction to ker(varpi) fixes the choice of standardized horizontal frame.
    """
    m = atlas.m
    base = atlas.base
    hint = hint or {}
    identity = jnp.eye(m, dtype=jnp.complex128)
    hint_fns = {c: hint.get(c, lambda z: identity) for c in base.chart_ids}
    J = jnp.asarray(standard_complex_structure(m))

    hermitian_fields = {}
    for chart in base.chart_ids:
        ref = hint_fns[chart]
        omega_fn, varpi_fn, A_fn = os.omega.evaluator(chart), nd.varpi.evaluator(chart), vf.A.evaluator(chart)

        def evaluator(x, omega_fn=omega_fn, varpi_fn=varpi_fn, A_fn=A_fn, ref=ref):
            omega, varpi = omega_fn(x), varpi_fn(x)
            return associated_hermitian(omega[:m, :m], varpi[:m], to_complex(A_fn(x), m), ref(to_complex(x, m)))

        hermitian_fields[chart] = evaluator
    # complex m x m matrix per point, not a tensor in the real slots
    hermitian = TensorField(base, (0, 0), hermitian_fields, name="P")

    _check_horizontal(os, nd, vf, hint_fns, probe or probe_samples(base))

    g_Z = MetricField(base, {c: (lambda x, fn=fn: real_hermitian(fn(x))) for c, fn in hermitian.components.items()},
                      name="g_Z")

    def structure_G(P, omega):
        return real_antilinear(-jnp.linalg.solve(P, jnp.conj(omega[:m, :m])))

    G = field_map(structure_G, hermitian, os.omega, valence=(1, 1), name="G")
    H = field_map(lambda g: g @ J, G, valence=(1, 1), name="H")
    g_Z.ensure_positive(probe or probe_samples(base))
    return AssociatedMetricData(g_Z, G, H, hermitian)


def _check_horizontal(os: OmegaStructure, nd: NormalizedContactData, vf: VerticalFrame,
                      hint_fns: Dict[str, ComplexFn], samples: Sequence[ChartSample]) -> None:
    m = nd.varpi.manifold.dim // 2
    for s in samples:
        omega_fn, varpi_fn, A_fn = os.omega.evaluator(s.chart), nd.varpi.evaluator(s.chart), vf.A.evaluator(s.chart)
        ref = hint_fns[s.chart]

        def horizontal(x):
            omega = omega_fn(x)
            _, M = _horizontal_operator(omega[:m, :m], varpi_fn(x)[:m], to_complex(A_fn(x), m), ref(to_complex(x, m)))
            return jnp.abs(jnp.linalg.det(M)), sqrt_residual(M, matrix_sqrt(M))

        determinants, residuals = jax.jit(jax.vmap(horizontal))(jnp.asarray(s.coords))
        if not np.all(np.asarray(determinants) > 1e-10):
            raise DegenerateHorizontal(f"G_hat restricted to ker(varpi) is degenerate on chart {s.chart}")
        worst = float(np.max(np.asarray(residuals)))
        if not worst <= SQRT_TOLERANCE:
            raise DegenerateHorizontal(f"Square root of the horizontal operator did not converge on chart {s.chart} "
                                       f"(residual {worst:.3e})")


def curvature_form(w: HermitianWeight) -> TensorField:
    """omega = sqrt(-1) ddbar log h from the complex Hessian, independent of sigma"""
    m = w.atlas.m
    E = jnp.concatenate([jnp.eye(m), 1j * jnp.eye(m)], axis=1)

    def make(chart):
        hessian = jax.hessian(w.log_h.evaluator(chart))

        def value(x):
            F = hessian(x)
            Hc = 0.25 * (F[:m, :m] + F[m:, m:] + 1j * (F[:m, m:] - F[m:, :m]))
            return -2.0 * jnp.imag(E.T @ Hc @ jnp.conj(E))

        return value

    return TensorField(w.atlas.base, (0, 2), {c: make(c) for c in w.h.components}, name="omega")
