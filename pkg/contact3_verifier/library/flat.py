import jax.numpy as jnp

from ..exceptions import UnsupportedDimension
from ..geometry.complex_contact import HermitianWeight, HolomorphicContactAtlas
from ..geometry.kernel import Box, Chart, ChartedManifold
from .model_bundle import KAHLER_EINSTEIN_ONLY, ModelBundle

MAX_FLAT_N = 2


def flat_contact_coefficients(z: jnp.ndarray, n: int) -> jnp.ndarray:
    """Coefficients of dz_0 + sum_k z_{2k-1} dz_{2k}"""
    c = jnp.zeros(2 * n + 1, dtype=jnp.complex128).at[0].set(1.0)
    for k in range(1, n + 1):
        c = c.at[2 * k].set(z[2 * k - 1])
    return c


def build_flat_model(n: int = 1) -> ModelBundle:
    """C^(2n+1) with its standard contact form and the trivial weight h = 1"""
    if not 1 <= n <= MAX_FLAT_N:
        raise UnsupportedDimension(f"Flat model supports 1 <= n <= {MAX_FLAT_N}, got {n}")
    m = 2 * n + 1
    base = ChartedManifold(f"C{m}", 2 * m, [Chart("0", Box.cube(2 * m, 1.0))])
    atlas = HolomorphicContactAtlas(base, n, {"0": lambda z: flat_contact_coefficients(z, n)}, {})
    weight = HermitianWeight(atlas, {"0": lambda z: 1.0 + 0.0 * jnp.real(z[0])})
    return ModelBundle(
        name=f"flat{m}",
        description=f"C^{m} with theta = dz0 + sum z(2k-1) dz(2k), h = 1; Q = C^{m} x S^1",
        source="section 2.1 contact axioms, single chart",
        atlas=atlas,
        weight=weight,
        informational=KAHLER_EINSTEIN_ONLY,
    )
