import numpy as np
import pytest

from contact3_verifier.exceptions import DomainViolation
from contact3_verifier.geometry.circle_bundle import horizontal_lift, lift_matrix, normality_tensor
from contact3_verifier.geometry.kernel import max_norm, standard_complex_structure, transition_residual


def pointwise(field, samples):
    return np.concatenate([field.batch(s.chart, s.coords) for s in samples])


def test_bundle_adds_the_fibre_angle(flat3):
    bundle = flat3.bundle
    assert bundle.total.dim == 7
    assert bundle.fiber_index == 6
    box = bundle.total.chart("0").box
    assert box.lower[-1] == 0.0
    assert box.upper[-1] == pytest.approx(2 * np.pi)


def test_fibre_angle_outside_circle_is_rejected(cp3):
    with pytest.raises(DomainViolation):
        cp3.bundle.total.point("0", [0.0] * 6 + [7.0])


def test_eta1_evaluates_to_one_on_the_fibre_generator(cp3):
    samples = cp3.bundle_samples(10, 0)
    eta = pointwise(cp3.hatakeyama.eta, samples)
    xi = pointwise(cp3.hatakeyama.xi, samples)
    assert np.allclose(np.einsum("pi,pi->p", eta, xi), 1.0)


def test_horizontal_lift_is_annihilated_by_eta1(cp3):
    s = cp3.bundle_samples(3, 1)[0]
    for coords in s.coords:
        q = cp3.bundle.total.point(s.chart, coords)
        X = np.linspace(-1.0, 1.0, 6)
        lifted = horizontal_lift(cp3.bundle, cp3.sigma, X, q)
        assert np.allclose(lifted[:6], X)
        assert float(np.asarray(cp3.eta1.at(q)) @ lifted) == pytest.approx(0.0, abs=1e-12)


def test_lifted_endomorphism_kills_the_fibre():
    J = standard_complex_structure(3)
    sigma = np.arange(6.0)
    lifted = np.asarray(lift_matrix(J, sigma))
    assert lifted.shape == (7, 7)
    assert np.allclose(lifted[:, -1], 0.0)
    assert np.allclose(lifted[:6, :6], J)


def test_eta1_glues_across_charts(cp3):
    samples = cp3.bundle.total.overlap_sample(10, 0)
    assert transition_residual(cp3.eta1, samples) < 1e-6
    assert cp3.bundle.total.round_trip_residual(10, 0) < 1e-10


def test_first_structure_is_normal(cp3):
    hs = cp3.hatakeyama
    assert max_norm(normality_tensor(hs.phi, hs.xi, hs.eta), cp3.bundle_samples(10, 2))[1] < 1e-7
