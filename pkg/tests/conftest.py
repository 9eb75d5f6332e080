import pytest

from contact3_verifier.geometry.pipeline import ModelGeometry
from contact3_verifier.library import load_model
from contact3_verifier.models import SuiteConfig

SAMPLES = 10
SEED = 42


@pytest.fixture(scope="session")
def flat3():
    return ModelGeometry(load_model("flat3"))


@pytest.fixture(scope="session")
def cp3():
    return ModelGeometry(load_model("cp3"))


@pytest.fixture(scope="session")
def cotangent():
    return ModelGeometry(load_model("cotangent"))


@pytest.fixture
def make_config():
    def factory(model="flat3", **kwargs):
        kwargs.setdefault("samples", SAMPLES)
        kwargs.setdefault("seed", SEED)
        return SuiteConfig(model=model, **kwargs)

    return factory


@pytest.fixture
def flat_samples(flat3):
    return flat3.base_samples(SAMPLES, SEED)


@pytest.fixture
def flat_bundle_samples(flat3):
    return flat3.bundle_samples(SAMPLES, SEED)
