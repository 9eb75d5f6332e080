import jax.numpy as jnp
import numpy as np
import pytest

from contact3_verifier.geometry.cone import (
    T_RANGE,
    expected_theta,
    extend,
    fibre_coordinate,
    sphere_complex_structure,
    upsilon_power_magnitude,
)
from contact3_verifier.geometry.kernel import field_map, max_norm


@pytest.fixture(scope="module")
def cone_samples(flat3):
    return flat3.cone_samples(10, 42)


def test_cone_adds_the_radial_coordinate(flat3):
    cone = flat3.cone
    assert cone.total.dim == flat3.bundle.total.dim + 1
    box = cone.total.chart("0").box
    assert (box.lower[-1], box.upper[-1]) == T_RANGE


def test_complex_structures_square_to_minus_identity(flat3, cone_samples):
    identity = jnp.eye(flat3.cone.total.dim)
    for I in flat3.hyper.I:
        square = field_map(lambda i: i @ i + identity, I, valence=(1, 1), name="I^2 + Id")
        assert max_norm(square, cone_samples)[1] < 1e-10


def test_structures_multiply_like_quaternions(flat3, cone_samples):
    I1, I2, I3 = flat3.hyper.I
    product = field_map(lambda a, b, c: a @ b - c, I1, I2, I3, valence=(1, 1), name="I1 I2 - I3")
    assert max_norm(product, cone_samples)[1] < 1e-10


def test_sphere_structure_is_complex(flat3, cone_samples):
    I = sphere_complex_structure(flat3.hyper.I, [0.0, 0.6, 0.8])
    identity = jnp.eye(flat3.cone.total.dim)
    square = field_map(lambda i: i @ i + identity, I, valence=(1, 1), name="I_s^2 + Id")
    assert max_norm(square, cone_samples)[1] < 1e-10


@pytest.mark.parametrize("alpha", [1, 2, 3])
def test_cone_metric_is_hermitian(flat3, cone_samples, alpha):
    hyper = flat3.hyper
    defect = field_map(lambda i, g: i.T @ g @ i - g, hyper.I[alpha - 1], hyper.g_U, valence=(0, 2), name="defect")
    assert max_norm(defect, cone_samples)[1] < 1e-9


def test_second_fundamental_form_matches_contact_data(flat3, cone_samples):
    """Theta_2 = d eta_2 + dt ^ eta_2 with the calibrated constant 1"""
    expected = expected_theta(flat3.cone, flat3.triple.etas[1], 1.0)
    defect = field_map(lambda a, b: a - b, flat3.hyper.thetas[1], expected, valence=(0, 2), name="defect")
    assert max_norm(defect, cone_samples)[1] < 1e-8


def test_tautological_form(flat3, cone_samples):
    """vartheta = e^t (eta_2 + i eta_3)"""
    _, eta2, eta3 = flat3.triple.etas
    expected = extend(flat3.cone, lambda a, b, t: jnp.concatenate([jnp.exp(t) * (a + 1j * b), jnp.zeros(1)]),
                      eta2, eta3, valence=(0, 1), name="e^t(eta2 + i eta3)")
    defect = field_map(lambda a, b: a - b, flat3.hyper.vartheta, expected, valence=(0, 1), name="defect")
    assert max_norm(defect, cone_samples)[1] < 1e-10


def test_fibre_norm(flat3, cone_samples):
    z = fibre_coordinate(flat3.cone, flat3.weight)
    for s in cone_samples:
        values = z.batch(s.chart, s.coords)
        h = flat3.weight.h.batch(s.chart, s.coords[:, :-2])
        assert np.allclose(np.abs(values) ** 2 * h, np.exp(2 * s.coords[:, -1]))


def test_holomorphic_symplectic_form_is_nondegenerate(flat3, cone_samples):
    assert upsilon_power_magnitude(flat3.hyper.upsilon, flat3.n, cone_samples) > 1e-6
