import jax.numpy as jnp
import numpy as np
import pytest

from contact3_verifier.exceptions import DegenerateHorizontal, DegenerateVerticalDistribution, InvalidWeight
from contact3_verifier.geometry import complex_contact
from contact3_verifier.geometry.complex_contact import (
    HermitianWeight,
    HolomorphicContactAtlas,
    associated_metric,
    chern_connection,
    gauge,
    gauge_transition_residual,
    matrix_sqrt,
    normalize,
    omega_structure,
    sqrt_residual,
    vertical_frame,
    vertical_subspace_angle,
)
from contact3_verifier.geometry.kernel import (
    Box,
    Chart,
    ChartedManifold,
    exterior_derivative,
    max_norm,
    standard_complex_structure,
)

J3 = standard_complex_structure(3)


def single_chart_atlas(theta, h):
    base = ChartedManifold("C3", 6, [Chart("0", Box.cube(6, 1.0))])
    atlas = HolomorphicContactAtlas(base, 1, {"0": theta}, {})
    return atlas, HermitianWeight(atlas, {"0": h})


def pointwise(field, samples):
    return np.concatenate([field.batch(s.chart, s.coords) for s in samples])


class TestAtlas:
    def test_flat_atlas_is_valid(self, flat3):
        validation = flat3.validation
        assert validation.failures(1e-10) == []
        assert validation.min_contact_volume == pytest.approx(1.0)

    def test_projective_atlas_is_valid(self, cp3):
        validation = cp3.validation
        assert validation.failures(1e-7) == []
        assert validation.points > 0

    def test_negative_weight_is_rejected(self):
        atlas, weight = single_chart_atlas(
            lambda z: jnp.stack([jnp.ones((), dtype=z.dtype), 0.0 * z[0], z[1]]),
            lambda z: -1.0 + 0.0 * jnp.real(z[0]),
        )
        with pytest.raises(InvalidWeight):
            normalize(atlas, weight)

    def test_closed_theta_has_no_vertical_frame(self):
        """theta = dz0 is not contact: G_hat vanishes identically"""
        atlas, weight = single_chart_atlas(
            lambda z: jnp.stack([jnp.ones((), dtype=z.dtype), 0.0 * z[0], 0.0 * z[0]]),
            lambda z: 1.0 + 0.0 * jnp.real(z[0]),
        )
        nd = normalize(atlas, weight)
        with pytest.raises(DegenerateVerticalDistribution):
            vertical_frame(omega_structure(nd, gauge(weight)), nd)


class TestNormalizedData:
    def test_v_is_u_composed_with_J(self, cp3):
        samples = cp3.base_samples(10, 0)
        u = pointwise(cp3.normalized.u, samples)
        v = pointwise(cp3.normalized.v, samples)
        assert np.allclose(v, u @ J3, atol=1e-12)

    def test_flat_gauge_vanishes(self, flat3, flat_samples):
        assert max_norm(flat3.sigma, flat_samples)[1] == 0.0

    def test_gauge_changes_by_transition_angle(self, cp3):
        assert gauge_transition_residual(cp3.weight, cp3.sigma, count=10) < 1e-6

    def test_real_parts_of_omega(self, cp3):
        """H_hat = G_hat(J., .)"""
        samples = cp3.base_samples(10, 1)
        G = pointwise(cp3.omega_structure.G_hat, samples)
        H = pointwise(cp3.omega_structure.H_hat, samples)
        assert np.allclose(H, np.einsum("ki,pkj->pij", J3, G), atol=1e-10)


class TestVerticalFrame:
    def test_frame_is_dual_to_u_v(self, flat3, flat_samples):
        A = pointwise(flat3.frame.A, flat_samples)
        B = pointwise(flat3.frame.B, flat_samples)
        u = pointwise(flat3.normalized.u, flat_samples)
        v = pointwise(flat3.normalized.v, flat_samples)
        assert np.allclose(np.einsum("pi,pi->p", u, A), 1.0)
        assert np.allclose(np.einsum("pi,pi->p", v, B), 1.0)
        assert np.allclose(np.einsum("pi,pi->p", u, B), 0.0, atol=1e-12)
        assert np.allclose(B, -np.einsum("ij,pj->pi", J3, A), atol=1e-12)

    def test_frame_spans_null_space(self, flat3, flat_samples):
        G = pointwise(flat3.omega_structure.G_hat, flat_samples)
        A = pointwise(flat3.frame.A, flat_samples)
        assert np.max(np.abs(np.einsum("pij,pi->pj", G, A))) < 1e-12

    def test_vertical_distribution_is_chart_independent(self, cp3):
        assert vertical_subspace_angle(cp3.frame, count=10) < 1e-6


class TestAssociatedMetric:
    def test_structure_relations(self, cp3):
        samples = cp3.base_samples(10, 2)
        G = pointwise(cp3.metric.G, samples)
        H = pointwise(cp3.metric.H, samples)
        A = pointwise(cp3.frame.A, samples)
        B = pointwise(cp3.frame.B, samples)
        u = pointwise(cp3.normalized.u, samples)
        v = pointwise(cp3.normalized.v, samples)
        identity = np.eye(6)
        G2 = np.einsum("pij,pjk->pik", G, G)
        expected = -identity + np.einsum("pi,pj->pij", A, u) + np.einsum("pi,pj->pij", B, v)
        assert np.allclose(G2, expected, atol=1e-8)
        assert np.allclose(np.einsum("pij,pjk->pik", H, G), -np.einsum("pij,pjk->pik", G, H), atol=1e-8)

    def test_metric_is_positive(self, cp3):
        assert cp3.metric.g_Z.min_eigenvalue(cp3.base_samples(10, 3)) > 0

    def test_flat_curvature_vanishes(self, flat3, flat_samples):
        assert max_norm(flat3.curvature, flat_samples)[1] < 1e-14


class TestSquareRoot:
    def test_converged_and_truncated_roots(self):
        M = jnp.array([[4.0, 1.0], [0.0, 9.0]], dtype=jnp.complex128)
        assert float(sqrt_residual(M, matrix_sqrt(M))) < 1e-12
        assert float(sqrt_residual(M, matrix_sqrt(M, iterations=1))) > 1e-2

    def test_unconverged_root_is_rejected(self, flat3, monkeypatch):
        monkeypatch.setattr(complex_contact, "matrix_sqrt", lambda M, iterations=None: jnp.zeros_like(M))
        with pytest.raises(DegenerateHorizontal, match="did not converge"):
            associated_metric(flat3.atlas, flat3.normalized, flat3.omega_structure, flat3.frame,
                              flat3.model.metric_hint, flat3.base_probe)


class TestChernConnection:
    def test_imaginary_part_is_the_gauge(self, cp3):
        samples = cp3.base_samples(5, 3)
        A = pointwise(chern_connection(cp3.weight), samples)
        assert np.allclose(np.imag(A), pointwise(cp3.sigma, samples), atol=1e-12)

    def test_curvature_is_minus_sqrt_minus_one_omega(self, cp3):
        """sqrt(-1) F = -omega with F computed from d' log h, not from sigma or the Hessian"""
        samples = cp3.base_samples(5, 3)
        F = pointwise(exterior_derivative(chern_connection(cp3.weight)), samples)
        omega = pointwise(cp3.curvature, samples)
        assert np.max(np.abs(omega)) > 0.1
        assert np.allclose(1j * F, -omega, atol=1e-9)
