import pytest

from contact3_verifier.exceptions import UnknownModel, UnsupportedDimension
from contact3_verifier.geometry.pipeline import ModelGeometry
from contact3_verifier.library import available_models, build_flat_model, describe_models, load_model
from contact3_verifier.library.model_bundle import KAHLER_EINSTEIN_ONLY


def test_registry_lists_every_model():
    assert available_models() == ["flat3", "cp3", "cotangent", "flat5"]


def test_models_are_built_once():
    assert load_model("flat3") is load_model("flat3")


def test_unknown_model():
    with pytest.raises(UnknownModel):
        load_model("hopf")


def test_flat_dimension_is_bounded():
    with pytest.raises(UnsupportedDimension):
        build_flat_model(3)
    with pytest.raises(UnsupportedDimension):
        build_flat_model(0)


@pytest.mark.parametrize("name, charts, base_dim", [
    ("flat3", 1, 6),
    ("flat5", 1, 10),
    ("cp3", 4, 6),
    ("cotangent", 2, 6),
])
def test_model_shapes(name, charts, base_dim):
    model = load_model(name)
    assert len(model.atlas.base.charts) == charts
    assert model.atlas.base.dim == base_dim
    assert model.n == (base_dim // 2 - 1) // 2


def test_expectation_table():
    """Only the Kahler-Einstein model has every check mandatory"""
    assert load_model("cp3").informational == ()
    for name in ("flat3", "flat5", "cotangent"):
        model = load_model(name)
        assert model.informational == KAHLER_EINSTEIN_ONLY
        assert model.is_informational("corollary2.sasaki_killing")
        assert model.is_informational("corollary4.d_omega1")
        assert not model.is_informational("corollary4.d_omega2")
        assert not model.is_informational("theorem1.almost_contact_1")


def test_summaries():
    summaries = {s["name"]: s for s in describe_models()}
    assert summaries["cp3"]["bundle_dim"] == 7
    assert summaries["flat5"]["bundle_dim"] == 11
    assert all(s["description"] for s in summaries.values())


def test_only_cotangent_maps_into_a_symplectic_target():
    assert load_model("cotangent").target is not None
    assert load_model("flat3").target is None


@pytest.mark.parametrize("name", ["cotangent", "cp3"])
def test_multi_chart_atlases_validate(name):
    validation = ModelGeometry(load_model(name)).validation
    assert validation.failures(1e-7) == []
    assert validation.min_contact_volume > 0
