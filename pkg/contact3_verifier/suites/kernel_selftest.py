from typing import Any, Dict, List, Tuple

import jax
import jax.numpy as jnp
import numpy as np

from ..geometry.kernel import (
    TensorField,
    central_difference,
    constant_field,
    contract_vectors,
    eval_jet,
    exterior_derivative,
    field_map,
    lie_bracket,
    max_norm,
    metric_covariant_derivative,
    nijenhuis_complex,
    nijenhuis_endo,
    nijenhuis_on_fields,
    torsion_field,
)
from ..geometry.pipeline import ModelGeometry
from .base import THEOREM_THRESHOLD, TRANSITION_THRESHOLD, VerificationSuite

FD_REF = "forward-propagated derivatives against central differences"
DD_REF = "d o d = 0"
JACOBI_REF = "Jacobi identity for the Lie bracket"
LEVI_CIVITA_REF = "Levi-Civita connection: nabla g = 0, torsion free"
NIJENHUIS_REF = "Nijenhuis bracket: [Phi, Phi](X, Y) = -[Phi, Phi](Y, X)"
LITERAL_REF = "Nijenhuis tensors against their Lie-bracket definitions on vector fields"
ROUND_TRIP_REF = "chart transitions invert each other"
DETERMINISM_REF = "same seed gives identical residuals"

FD_COMPONENTS = 10
FD_POINTS = 20
FD_STEP = 1e-5


def _fd_candidates(geometry: ModelGeometry) -> List[TensorField]:
    """Real fields spanning weight, normalized data, metric and bundle stages"""
    return [
        geometry.weight.h,
        geometry.weight.log_h,
        geometry.normalized.u,
        geometry.normalized.v,
        geometry.sigma,
        geometry.metric.g_Z,
        geometry.eta1,
        geometry.kobayashi.eta2,
        geometry.g_Q,
        geometry.phi2,
    ]


def _first_points(field: TensorField, count: int, seed: int) -> List[Tuple[str, np.ndarray]]:
    """Up to `count` seeded points, grouped by chart"""
    grouped, remaining = [], count
    for s in field.manifold.sample(count, seed):
        if remaining <= 0:
            break
        grouped.append((s.chart, s.coords[:remaining]))
        remaining -= min(remaining, s.count)
    return grouped


def fd_crosscheck(geometry: ModelGeometry, seed: int, components: int = FD_COMPONENTS,
                  points: int = FD_POINTS, step: float = FD_STEP) -> Tuple[int, float]:
    """Worst relative error between eval_jet gradients and central differences.

    Picks `components` (field, component) pairs with a seeded generator and compares at
    `points` seeded sample points; the error is scaled by max(1, |gradient|).
    """
    rng = np.random.default_rng([seed, 3])
    candidates = _fd_candidates(geometry)
    worst, evaluated = 0.0, 0
    for _ in range(components):
        field = candidates[int(rng.integers(len(candidates)))]
        size = int(np.prod(field.shape)) if field.shape else 1
        index = int(rng.integers(size))
        for chart, block in _first_points(field, points, seed):
            evaluator = field.evaluator(chart)
            component = jax.jit(lambda x, evaluator=evaluator, index=index: jnp.real(jnp.ravel(evaluator(x))[index]))
            for coords in block:
                jet = eval_jet(field, field.manifold.point(chart, coords), order=1)
                exact = np.real(jet.first.reshape(jet.first.shape[0], -1)[:, index])
                approx = central_difference(component, coords, step)
                scale = max(1.0, float(np.max(np.abs(exact))))
                worst = max(worst, float(np.max(np.abs(exact - approx))) / scale)
                evaluated += 1
    return evaluated, worst


class KernelSelfTestSuite(VerificationSuite):
    """Identities of the differential-geometry kernel itself"""

    name = "kernel-selftest"

    async def run(self) -> List[Dict[str, Any]]:
        self.logger.info(f"Running {self.name} on {self.model.name}")
        checks = []

        checks.extend(await self._check_fd_crosscheck())
        checks.extend(await self._check_d_squared())
        checks.extend(await self._check_jacobi())
        checks.extend(await self._check_levi_civita())
        checks.extend(await self._check_nijenhuis())
        checks.extend(await self._check_nijenhuis_literal())
        checks.extend(await self._check_round_trip())
        checks.extend(await self._check_determinism())

        self.logger.info(f"Finished {self.name}: {len(checks)} checks")
        return checks

    async def _check_fd_crosscheck(self) -> List[Dict[str, Any]]:
        specs = [("fd_crosscheck", FD_REF, self.config.tol_fd)]
        try:
            points, worst = fd_crosscheck(self.geometry, self.config.seed)
            return [self.record("fd_crosscheck", FD_REF, points, worst, self.config.tol_fd)]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_d_squared(self) -> List[Dict[str, Any]]:
        specs = [("d_squared_base", DD_REF, THEOREM_THRESHOLD), ("d_squared_bundle", DD_REF, THEOREM_THRESHOLD)]
        try:
            g = self.geometry
            base = [exterior_derivative(exterior_derivative(f)) for f in (g.sigma, g.normalized.u, g.normalized.v)]
            bundle = [exterior_derivative(exterior_derivative(f)) for f in g.triple.etas]
            return [
                self.group_check("d_squared_base", DD_REF, base, self.base_samples(), THEOREM_THRESHOLD),
                self.group_check("d_squared_bundle", DD_REF, bundle, self.bundle_samples(), THEOREM_THRESHOLD),
            ]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_jacobi(self) -> List[Dict[str, Any]]:
        """[xi1, [xi2, xi3]] + [xi2, [xi3, xi1]] + [xi3, [xi1, xi2]]"""
        specs = [("jacobi", JACOBI_REF, THEOREM_THRESHOLD)]
        try:
            x1, x2, x3 = self.geometry.triple.xis
            jacobi = field_map(lambda a, b, c: a + b + c, lie_bracket(x1, lie_bracket(x2, x3)),
                               lie_bracket(x2, lie_bracket(x3, x1)), lie_bracket(x3, lie_bracket(x1, x2)),
                               valence=(1, 0), name="Jacobi")
            return [self.field_check("jacobi", JACOBI_REF, jacobi, self.bundle_samples(), THEOREM_THRESHOLD)]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_levi_civita(self) -> List[Dict[str, Any]]:
        specs = [("metric_parallel", LEVI_CIVITA_REF, THEOREM_THRESHOLD),
                 ("torsion_free", LEVI_CIVITA_REF, THEOREM_THRESHOLD)]
        try:
            g = self.geometry
            return [
                self.group_check("metric_parallel", LEVI_CIVITA_REF,
                                 [metric_covariant_derivative(g.g_Q)], self.bundle_samples(), THEOREM_THRESHOLD),
                self.group_check("torsion_free", LEVI_CIVITA_REF,
                                 [torsion_field(g.metric.g_Z)], self.base_samples(), THEOREM_THRESHOLD),
            ]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_nijenhuis(self) -> List[Dict[str, Any]]:
        specs = [("nijenhuis_antisymmetric", NIJENHUIS_REF, THEOREM_THRESHOLD)]
        try:
            fields = [field_map(lambda N: N + jnp.swapaxes(N, 1, 2), nijenhuis_endo(phi), valence=(1, 2),
                                name=f"[{phi.name},{phi.name}] symmetric part")
                      for phi in self.geometry.triple.phis]
            return [self.group_check("nijenhuis_antisymmetric", NIJENHUIS_REF, fields, self.bundle_samples(),
                                     THEOREM_THRESHOLD)]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_nijenhuis_literal(self) -> List[Dict[str, Any]]:
        """Assembled Nijenhuis tensors contracted with X, Y against the bracket expressions in X, Y.

        The endomorphism convention is tensorial for every Phi_alpha, so the Reeb fields serve as
        X, Y there; the complex convention needs J^2 = -Id and is checked on J with coordinate fields.
        """
        specs = [("nijenhuis_literal_bundle", LITERAL_REF, THEOREM_THRESHOLD),
                 ("nijenhuis_literal_base", LITERAL_REF, THEOREM_THRESHOLD)]
        try:
            g = self.geometry
            _, xi2, xi3 = g.triple.xis
            bundle = [field_map(lambda a, b: a - b, contract_vectors(nijenhuis_endo(phi), xi2, xi3),
                                nijenhuis_on_fields(phi, xi2, xi3, convention="endo"), valence=(1, 0),
                                name=f"[{phi.name},{phi.name}](xi2, xi3) defect")
                      for phi in g.triple.phis]
            base = g.atlas.base
            first = constant_field(base, np.eye(base.dim)[0], (1, 0), name="d_0")
            last = constant_field(base, np.eye(base.dim)[-1], (1, 0), name="d_last")
            J = g.atlas.J
            base_defect = field_map(lambda a, b: a - b, contract_vectors(nijenhuis_complex(J), first, last),
                                    nijenhuis_on_fields(J, first, last), valence=(1, 0), name="N_J(d_0, d_last) defect")
            return [
                self.group_check("nijenhuis_literal_bundle", LITERAL_REF, bundle, self.bundle_samples(),
                                 THEOREM_THRESHOLD),
                self.field_check("nijenhuis_literal_base", LITERAL_REF, base_defect, self.base_samples(),
                                 THEOREM_THRESHOLD),
            ]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_round_trip(self) -> List[Dict[str, Any]]:
        specs = [("round_trip", ROUND_TRIP_REF, TRANSITION_THRESHOLD)]
        try:
            g = self.geometry
            count = self.overlap_count()
            worst = max(g.atlas.base.round_trip_residual(count, self.config.seed),
                        g.bundle.total.round_trip_residual(count, self.config.seed))
            points = 2 * count * len(g.atlas.base.overlaps)
            return [self.record("round_trip", ROUND_TRIP_REF, points, worst, TRANSITION_THRESHOLD)]
        except Exception as e:
            return self.failed(specs, e)

    async def _check_determinism(self) -> List[Dict[str, Any]]:
        """Two evaluations from freshly drawn samples agree bit for bit"""
        specs = [("determinism", DETERMINISM_REF, 0.0)]
        try:
            g = self.geometry
            field = g.triple.etas[1]
            first = max_norm(field, self.bundle_samples())
            second = max_norm(field, g.bundle_samples(self.config.samples, self.config.seed))
            return [self.record("determinism", DETERMINISM_REF, first[0], 0.0 if first == second else 1.0, 0.0)]
        except Exception as e:
            return self.failed(specs, e)
