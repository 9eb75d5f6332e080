from dataclasses import dataclass, field
from fnmatch import fnmatch
from typing import Callable, Dict, Optional, Tuple

import jax.numpy as jnp
import numpy as np

from ..geometry.complex_contact import HermitianWeight, HolomorphicContactAtlas
from ..geometry.kernel import ChartedManifold, TensorField

# checks that only hold under extra hypotheses (Kahler-Einstein base, hyperkahler cone)
KAHLER_EINSTEIN_ONLY = (
    "corollary2.*",
    "corollary3.*",
    "corollary4.d_omega1",
    "corollary4.normality_i2",
)


@dataclass(frozen=True)
class TautologicalTarget:
    """A holomorphic symplectic manifold the cone maps into, with its Liouville form"""

    manifold: ChartedManifold
    chart_maps: Dict[str, Callable[[jnp.ndarray], jnp.ndarray]]
    target_chart: str
    liouville: TensorField
    complex_structure: np.ndarray


@dataclass(frozen=True)
class ModelBundle:
    name: str
    description: str
    source: str
    atlas: HolomorphicContactAtlas
    weight: HermitianWeight
    metric_hint: Dict[str, Callable] = field(default_factory=dict)
    informational: Tuple[str, ...] = ()
    target: Optional[TautologicalTarget] = None

    @property
    def n(self) -> int:
        return self.atlas.n

    def is_informational(self, check_name: str) -> bool:
        return any(fnmatch(check_name, pattern) for pattern in self.informational)

    def summary(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "description": self.description,
            "source": self.source,
            "charts": len(self.atlas.base.charts),
            "base_dim": self.atlas.base.dim,
            "bundle_dim": self.atlas.base.dim + 1,
            "informational": list(self.informational),
        }
