"""Kernel identities on small charted manifolds with closed-form answers."""
import math

import jax
import jax.numpy as jnp
import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from contact3_verifier.exceptions import DomainViolation, SingularMetric, UnknownChart, ValenceMismatch
from contact3_verifier.geometry.kernel import (
    Box,
    Chart,
    ChartedManifold,
    SmoothMap,
    WedgeForm,
    central_difference,
    christoffel_field,
    constant_field,
    contract_vectors,
    coordinate_field,
    covariant_derivative,
    curvature,
    eval_jet,
    exterior_derivative,
    field_map,
    lie_bracket,
    max_norm,
    metric_covariant_derivative,
    min_topform_magnitude,
    nijenhuis_complex,
    nijenhuis_endo,
    nijenhuis_on_fields,
    pullback,
    ricci_field,
    standard_complex_structure,
    torsion_field,
    wedge,
)

finite = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False, allow_infinity=False)
covector = st.lists(finite, min_size=3, max_size=3)


@pytest.fixture(scope="module")
def r3():
    return ChartedManifold("R3", 3, [Chart("0", Box.cube(3, 0.8))])


@pytest.fixture(scope="module")
def ball():
    return ChartedManifold("B3", 3, [Chart("0", Box.cube(3, 0.5), domain=lambda x: float(np.sum(x * x)) < 1.0)])


def round_sphere(manifold):
    """Stereographic metric of the unit S^3: Ric = 2 g, scalar curvature 6"""
    return coordinate_field(manifold, (0, 2),
                            lambda x: 4.0 / (1.0 + jnp.sum(x * x)) ** 2 * jnp.eye(3), name="g_S3")


class TestCharts:
    def test_standard_complex_structure_squares_to_minus_identity(self):
        J = standard_complex_structure(3)
        assert np.allclose(J @ J, -np.eye(6))
        assert J[3, 0] == 1.0

    def test_samples_stay_in_the_box(self, r3):
        for s in r3.sample(50, 3):
            assert s.coords.shape == (50, 3)
            assert all(r3.chart(s.chart).box.contains(x) for x in s.coords)

    def test_sampling_is_seeded(self, r3):
        first = r3.sample(20, 11)[0].coords
        second = r3.sample(20, 11)[0].coords
        assert np.array_equal(first, second)
        assert not np.array_equal(first, r3.sample(20, 12)[0].coords)

    def test_point_outside_domain_is_rejected(self, ball):
        with pytest.raises(DomainViolation):
            ball.point("0", [0.9, 0.9, 0.0])
        with pytest.raises(DomainViolation):
            ball.point("0", [0.1, 0.1])

    def test_unknown_chart(self, r3):
        with pytest.raises(UnknownChart):
            r3.chart("7")
        with pytest.raises(UnknownChart):
            r3.overlap("0", "1")

    def test_dimension_limits(self):
        with pytest.raises(ValueError):
            ChartedManifold("R0", 0, [])


class TestExteriorCalculus:
    @given(covector, covector)
    @settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
    def test_wedge_of_one_forms_is_antisymmetric(self, r3, a, b):
        alpha = constant_field(r3, a, (0, 1), name="a")
        beta = constant_field(r3, b, (0, 1), name="b")
        p = r3.point("0", [0.1, -0.2, 0.3])
        ab = np.asarray(wedge(alpha, beta).at(p))
        ba = np.asarray(wedge(beta, alpha).at(p))
        expected = np.outer(a, b) - np.outer(b, a)
        assert np.allclose(ab, expected, atol=1e-12)
        assert np.allclose(ab, -ba, atol=1e-12)

    def test_wedge_of_form_with_itself_vanishes(self, r3):
        alpha = coordinate_field(r3, (0, 1), lambda x: jnp.array([x[1], x[0] * x[2], 1.0 + x[0]]), name="alpha")
        _, worst = max_norm(wedge(alpha, alpha), r3.sample(10, 0))
        assert worst < 1e-14

    def test_d_has_no_half_factor(self, r3):
        """d(x dy) = dx ^ dy with (dx ^ dy)(d_x, d_y) = 1"""
        form = coordinate_field(r3, (0, 1), lambda x: jnp.array([0.0, x[0], 0.0]), name="x dy")
        d = np.asarray(exterior_derivative(form).at(r3.point("0", [0.3, 0.1, -0.4])))
        assert d[0, 1] == pytest.approx(1.0)
        assert d[1, 0] == pytest.approx(-1.0)
        assert np.count_nonzero(np.abs(d) > 1e-14) == 2

    def test_d_squared_vanishes(self, r3):
        f = coordinate_field(r3, (0, 0), lambda x: x[0] ** 2 * x[1] + jnp.sin(x[2]) * x[0], name="f")
        alpha = coordinate_field(r3, (0, 1), lambda x: jnp.array([x[1] * x[2], jnp.exp(x[0]), x[0] * x[1] ** 2]),
                                 name="alpha")
        samples = r3.sample(20, 1)
        assert max_norm(exterior_derivative(exterior_derivative(f)), samples)[1] < 1e-12
        assert max_norm(exterior_derivative(exterior_derivative(alpha)), samples)[1] < 1e-12

    def test_top_form_coefficient(self, r3):
        dx, dy, dz = (constant_field(r3, np.eye(3)[i], (0, 1), name=f"dx{i}") for i in range(3))
        volume = WedgeForm([dx, dy, dz])
        assert min_topform_magnitude(volume, r3.sample(5, 0)) == pytest.approx(1.0)
        assert min_topform_magnitude(WedgeForm([dy, dx, dz]), r3.sample(5, 0)) == pytest.approx(1.0)

    def test_wedge_rejects_vectors_and_excess_degree(self, r3):
        vector = constant_field(r3, [1.0, 0.0, 0.0], (1, 0), name="X")
        one_form = constant_field(r3, [1.0, 0.0, 0.0], (0, 1), name="dx")
        with pytest.raises(ValenceMismatch):
            wedge(vector, one_form)
        with pytest.raises(ValenceMismatch):
            WedgeForm([one_form] * 4)
        with pytest.raises(ValenceMismatch):
            exterior_derivative(vector)

    def test_pullback_by_identity(self, r3):
        alpha = coordinate_field(r3, (0, 1), lambda x: jnp.array([x[1], -x[0], x[2] ** 2]), name="alpha")
        pulled = pullback(SmoothMap.identity(r3), alpha)
        for s in r3.sample(10, 2):
            assert np.allclose(pulled.batch(s.chart, s.coords), alpha.batch(s.chart, s.coords))


class TestDerivatives:
    def test_jet_matches_central_difference(self, r3):
        f = coordinate_field(r3, (0, 0), lambda x: jnp.cos(x[0]) * x[1] + x[2] ** 3, name="f")
        for coords in r3.sample(5, 4)[0].coords:
            jet = eval_jet(f, r3.point("0", coords), order=2)
            approx = central_difference(f.evaluator("0"), coords)
            assert np.allclose(jet.first, approx, atol=1e-8)
            assert np.allclose(jet.second, jet.second.T, atol=1e-12)

    def test_jet_order_is_checked(self, r3):
        f = constant_field(r3, 1.0, (0, 0))
        with pytest.raises(ValueError):
            eval_jet(f, r3.point("0", [0.0, 0.0, 0.0]), order=3)

    def test_lie_bracket_of_coordinate_fields(self, r3):
        """[x d_y, d_x] = -d_y"""
        X = coordinate_field(r3, (1, 0), lambda x: jnp.array([0.0, x[0], 0.0]), name="x d_y")
        Y = constant_field(r3, [1.0, 0.0, 0.0], (1, 0), name="d_x")
        value = np.asarray(lie_bracket(X, Y).at(r3.point("0", [0.2, 0.4, -0.1])))
        assert np.allclose(value, [0.0, -1.0, 0.0])


class TestRiemannianKernel:
    def test_round_sphere_curvature(self, r3):
        g = round_sphere(r3)
        for coords in r3.sample(4, 5)[0].coords:
            p = r3.point("0", coords)
            _, ricci, scalar = curvature(g, p)
            assert scalar == pytest.approx(6.0, rel=1e-9)
            assert np.allclose(ricci, 2.0 * np.asarray(g.at(p)), atol=1e-9)

    def test_levi_civita_is_metric_and_torsion_free(self, r3):
        g = round_sphere(r3)
        samples = r3.sample(10, 6)
        assert max_norm(metric_covariant_derivative(g), samples)[1] < 1e-12
        assert max_norm(torsion_field(g), samples)[1] < 1e-14

    def test_constant_complex_structure_is_integrable(self):
        m = ChartedManifold("C2", 4, [Chart("0", Box.cube(4, 1.0))])
        J = constant_field(m, standard_complex_structure(2), (1, 1), name="J")
        samples = m.sample(5, 0)
        assert max_norm(nijenhuis_complex(J), samples)[1] < 1e-14
        assert max_norm(nijenhuis_endo(J), samples)[1] < 1e-14

    def test_connection_fields_reject_singular_metrics(self, r3):
        s = r3.sample(4, 0)[0]
        for diagonal in ([1.0, 1.0, 0.0], [1.0, 1.0, 1e-14], [1.0, -1.0, 1.0]):
            g = constant_field(r3, np.diag(diagonal), (0, 2), name="g")
            with pytest.raises(SingularMetric):
                christoffel_field(g).batch(s.chart, s.coords)
            with pytest.raises(SingularMetric):
                ricci_field(g).batch(s.chart, s.coords)

    def test_connection_fields_need_a_metric(self, r3):
        X = constant_field(r3, [1.0, 0.0, 0.0], (1, 0), name="d_x")
        with pytest.raises(ValenceMismatch):
            christoffel_field(X)
        with pytest.raises(ValenceMismatch):
            covariant_derivative(X, X)


class TestFieldEvaluation:
    def test_pointwise_batch_matches_composed_components(self, r3):
        f = coordinate_field(r3, (0, 1), lambda x: jnp.array([jnp.sin(x[0]), x[1] * x[2], x[0] ** 2]), name="f")
        combined = field_map(lambda x, v: x[2] * v + jnp.cos(v), f, valence=(0, 1), name="combined", with_coords=True)
        product = wedge(f, combined)
        s = r3.sample(12, 8)[0]
        for field in (combined, product):
            closure = np.asarray(jax.vmap(field.evaluator("0"))(jnp.asarray(s.coords)))
            assert np.allclose(field.batch(s.chart, s.coords), closure, atol=1e-14)

    def test_batches_are_kept_and_read_only(self, r3):
        f = coordinate_field(r3, (0, 0), lambda x: jnp.exp(x[0]) * x[1], name="f")
        s = r3.sample(5, 9)[0]
        first = f.batch(s.chart, s.coords)
        assert f.batch(s.chart, s.coords.copy()) is first
        assert not first.flags.writeable
        assert f.batch(s.chart, s.coords + 0.1) is not first

    def test_derived_fields_are_built_once(self, r3):
        alpha = coordinate_field(r3, (0, 1), lambda x: jnp.array([x[1], -x[0], x[2] ** 2]), name="alpha")
        X = coordinate_field(r3, (1, 0), lambda x: jnp.array([0.0, x[0], 0.0]), name="x d_y")
        Y = constant_field(r3, [1.0, 0.0, 0.0], (1, 0), name="d_x")
        g = round_sphere(r3)
        identity = SmoothMap.identity(r3)
        assert exterior_derivative(alpha) is exterior_derivative(alpha)
        assert lie_bracket(X, Y) is lie_bracket(X, Y)
        assert lie_bracket(X, Y) is not lie_bracket(Y, X)
        assert christoffel_field(g) is christoffel_field(g)
        assert covariant_derivative(g, X) is covariant_derivative(g, X)
        assert pullback(identity, alpha) is pullback(identity, alpha)

    def test_max_norm_keeps_nan(self, r3):
        f = coordinate_field(r3, (0, 0), lambda x: jnp.log(x[0]), name="log x")
        samples = r3.sample(20, 1)
        assert np.any(samples[0].coords[:, 0] < 0)
        assert math.isnan(max_norm(f, samples)[1])


class TestNijenhuisConventions:
    """Assembled tensors against the literal bracket expressions on non-coordinate fields"""

    @pytest.fixture(scope="class")
    def r4(self):
        return ChartedManifold("R4", 4, [Chart("0", Box.cube(4, 0.7))])

    @staticmethod
    def vector_fields(m):
        X = coordinate_field(m, (1, 0), lambda x: jnp.array([x[1], 1.0, x[3] ** 2, 0.0 * x[0]]), name="X")
        Y = coordinate_field(m, (1, 0), lambda x: jnp.array([0.0 * x[0], x[0], 1.0, jnp.sin(x[2])]), name="Y")
        return X, Y

    @staticmethod
    def defect(assembled, literal):
        return field_map(lambda a, b: a - b, assembled, literal, valence=(1, 0), name="defect")

    def test_endomorphism_convention(self, r4):
        phi = coordinate_field(r4, (1, 1), lambda x: jnp.array([[x[1], 1.0, 0.0, x[3]],
                                                                [0.0, x[0] * x[2], 1.0, 0.0],
                                                                [jnp.sin(x[3]), 0.0, x[1], 0.0],
                                                                [0.0, 0.0, x[2] ** 2, 1.0]]), name="phi")
        X, Y = self.vector_fields(r4)
        samples = r4.sample(8, 1)
        literal = nijenhuis_on_fields(phi, X, Y, convention="endo")
        assert max_norm(self.defect(contract_vectors(nijenhuis_endo(phi), X, Y), literal), samples)[1] < 1e-10
        assert max_norm(literal, samples)[1] > 1e-3

    def test_complex_convention(self, r4):
        """J = A J_0 A^-1 squares to -Id but is not constant"""
        J0 = jnp.asarray(standard_complex_structure(2))

        def conjugated(x):
            A = jnp.eye(4) + jnp.array([[0.0, x[1], 0.0, 0.0], [0.0, 0.0, x[0] * x[3], 0.0],
                                        [0.0, 0.0, 0.0, x[2]], [0.0, 0.0, 0.0, 0.0]])
            return A @ J0 @ jnp.linalg.inv(A)

        J = coordinate_field(r4, (1, 1), conjugated, name="J")
        X, Y = self.vector_fields(r4)
        samples = r4.sample(8, 2)
        literal = nijenhuis_on_fields(J, X, Y)
        assert max_norm(self.defect(contract_vectors(nijenhuis_complex(J), X, Y), literal), samples)[1] < 1e-10

    def test_unknown_convention(self, r4):
        X, Y = self.vector_fields(r4)
        J = constant_field(r4, standard_complex_structure(2), (1, 1), name="J")
        with pytest.raises(ValueError):
            nijenhuis_on_fields(J, X, Y, convention="bogus")


matrix = st.lists(finite, min_size=9, max_size=9).map(lambda v: np.asarray(v).reshape(3, 3))


@given(matrix, matrix)
@settings(max_examples=15, deadline=None)
def test_bracket_of_linear_fields(A, B):
    """[Ax, Bx] = (BA - AB) x and the bracket is antisymmetric"""
    r3 = ChartedManifold("R3", 3, [Chart("0", Box.cube(3, 0.8))])
    X = coordinate_field(r3, (1, 0), lambda x: jnp.asarray(A) @ x, name="Ax")
    Y = coordinate_field(r3, (1, 0), lambda x: jnp.asarray(B) @ x, name="Bx")
    s = r3.sample(5, 0)[0]
    XY = lie_bracket(X, Y).batch(s.chart, s.coords)
    YX = lie_bracket(Y, X).batch(s.chart, s.coords)
    assert np.allclose(XY, s.coords @ (B @ A - A @ B).T, atol=1e-10)
    assert np.allclose(XY, -YX, atol=1e-12)
