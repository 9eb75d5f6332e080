import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings, strategies as st

from contact3_verifier.exceptions import NotUnitSphereParameter
from contact3_verifier.geometry.kernel import max_norm, min_topform_magnitude
from contact3_verifier.geometry.triple_structure import (
    CYCLIC,
    almost_contact_defects,
    contact_metric_defect,
    metric_defects,
    r1_defects,
    reeb_defect,
    sphere_family,
    taut_volume,
)


def worst(fields, samples):
    return max(max_norm(f, samples)[1] for f in fields)


@pytest.mark.parametrize("alpha", [1, 2, 3])
def test_each_structure_is_almost_contact(flat3, flat_bundle_samples, alpha):
    defects = almost_contact_defects(*flat3.triple.structure(alpha))
    assert worst(defects.values(), flat_bundle_samples) < 1e-8


@pytest.mark.parametrize("alpha", [1, 2, 3])
def test_g_Q_is_compatible(flat3, flat_bundle_samples, alpha):
    phi, xi, eta = flat3.triple.structure(alpha)
    assert worst(metric_defects(flat3.g_Q, phi, xi, eta).values(), flat_bundle_samples) < 1e-8


@pytest.mark.parametrize("cycle", CYCLIC)
def test_quaternionic_relations(flat3, flat_bundle_samples, cycle):
    assert worst(r1_defects(flat3.triple, *cycle).values(), flat_bundle_samples) < 1e-8


@pytest.mark.parametrize("alpha", [2, 3])
def test_contact_metric_with_calibrated_constant(flat3, flat_bundle_samples, alpha):
    assert max_norm(contact_metric_defect(flat3.triple, alpha, 1.0), flat_bundle_samples)[1] < 1e-8
    assert max_norm(contact_metric_defect(flat3.triple, alpha, 2.0), flat_bundle_samples)[1] > 0.1
    assert max_norm(reeb_defect(flat3.triple, alpha), flat_bundle_samples)[1] < 1e-8


def test_volume_forms_agree(flat3, flat_bundle_samples):
    """eta_2 ^ (d eta_2)^3 = eta_3 ^ (d eta_3)^3, nowhere zero"""
    volumes = []
    for alpha in (2, 3):
        element = sphere_family(flat3.triple, [0.0, 1.0, 0.0] if alpha == 2 else [0.0, 0.0, 1.0])
        s = flat_bundle_samples[0]
        volumes.append(taut_volume(element).top_coefficient(s.chart, s.coords))
    assert np.allclose(volumes[0], volumes[1], rtol=1e-8)
    assert np.min(np.abs(volumes[0])) > 1e-3


def test_sphere_element_is_almost_contact(flat3, flat_bundle_samples):
    element = sphere_family(flat3.triple, [0.6, 0.0, 0.8])
    defects = almost_contact_defects(element.phi, element.xi, element.eta)
    assert worst(defects.values(), flat_bundle_samples) < 1e-8
    assert min_topform_magnitude(taut_volume(element), flat_bundle_samples) > 1e-3


def test_sphere_parameter_must_be_unit(flat3):
    with pytest.raises(NotUnitSphereParameter):
        sphere_family(flat3.triple, [1.0, 1.0, 0.0])


def test_structure_index_is_checked(flat3):
    with pytest.raises(ValueError):
        flat3.triple.structure(4)


@pytest.mark.slow
def test_projective_triple_is_almost_contact(cp3):
    samples = cp3.bundle_samples(10, 0)
    for alpha in (1, 2, 3):
        assert worst(almost_contact_defects(*cp3.triple.structure(alpha)).values(), samples) < 1e-7


@given(st.lists(st.floats(min_value=-1.0, max_value=1.0, allow_nan=False), min_size=3, max_size=3))
@settings(max_examples=5, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
def test_every_unit_parameter_gives_an_almost_contact_structure(flat3, flat_bundle_samples, raw):
    s = np.asarray(raw)
    assume(np.linalg.norm(s) > 0.1)
    element = sphere_family(flat3.triple, s / np.linalg.norm(s))
    defects = almost_contact_defects(element.phi, element.xi, element.eta)
    assert worst(defects.values(), flat_bundle_samples) < 1e-8
