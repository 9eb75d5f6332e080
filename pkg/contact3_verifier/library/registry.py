import logging
from functools import lru_cache
from typing import Any, Callable, Dict, List

from ..exceptions import UnknownModel
from .cotangent import build_cotangent_model
from .flat import build_flat_model
from .model_bundle import ModelBundle
from .projective import build_projective_twistor

logger = logging.getLogger(__name__)

MODEL_BUILDERS: Dict[str, Callable[[], ModelBundle]] = {
    "flat3": lambda: build_flat_model(1),
    "cp3": build_projective_twistor,
    "cotangent": build_cotangent_model,
    "flat5": lambda: build_flat_model(2),
}


def available_models() -> List[str]:
    return list(MODEL_BUILDERS)


@lru_cache(maxsize=None)
def load_model(name: str) -> ModelBundle:
    try:
        builder = MODEL_BUILDERS[name]
    except KeyError:
        raise UnknownModel(f"Unknown model {name!r}; choose from {', '.join(MODEL_BUILDERS)}") from None
    logger.info(f"Building model {name}")
    return builder()


def describe_models() -> List[Dict[str, Any]]:
    return [load_model(name).summary() for name in MODEL_BUILDERS]
