from .cotangent import build_cotangent_model
from .flat import build_flat_model
from .model_bundle import ModelBundle, TautologicalTarget
from .projective import build_projective_twistor
from .registry import available_models, describe_models, load_model

__all__ = [
    "ModelBundle",
    "TautologicalTarget",
    "available_models",
    "build_cotangent_model",
    "build_flat_model",
    "build_projective_twistor",
    "describe_models",
    "load_model",
]
