"""Chart atlases, tensor fields and the differential operators acting on them.

Components are dense arrays indexed in slot order, contravariant slots first. An
endomorphism E stores E[i, j] = i-th component of E(d/dx_j); a k-form stores its fully
antisymmetric array with w[i1, ..., ik] = w(d/dx_i1, ..., d/dx_ik). The exterior derivative
carries no 1/2 factor: (dw)[i, j] = d_i w_j - d_j w_i. Derivative arrays put the
differentiation index first.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import jax
import jax.numpy as jnp
import numpy as np

from ..exceptions import DomainViolation, SingularMetric, UnknownChart, ValenceMismatch

jax.config.update("jax_enable_x64", True)

logger = logging.getLogger(__name__)

Evaluator = Callable[[jnp.ndarray], jnp.ndarray]

TWO_PI = 2.0 * math.pi
MAX_DIMENSION = 16
BATCH_CACHE_SIZE = 16
MAX_CONDITION = 1e12


@dataclass(frozen=True)
class Box:
    """Axis-aligned coordinate box used for seeded sampling"""

    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    @classmethod
    def cube(cls, dim: int, half_width: float) -> "Box":
        return cls((-half_width,) * dim, (half_width,) * dim)

    @property
    def dim(self) -> int:
        return len(self.lower)

    def center(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.lower, dtype=float) + np.asarray(self.upper, dtype=float))

    def contains(self, coords) -> bool:
        x = np.asarray(coords, dtype=float)
        return bool(np.all(x >= np.asarray(self.lower) - 1e-12) and np.all(x <= np.asarray(self.upper) + 1e-12))

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        return lower + (upper - lower) * rng.random((count, self.dim))

    def extended(self, lower: float, upper: float) -> "Box":
        return Box(self.lower + (float(lower),), self.upper + (float(upper),))


@dataclass(frozen=True)
class Chart:
    chart_id: str
    box: Box
    domain: Optional[Callable[[np.ndarray], bool]] = None

    def contains(self, coords) -> bool:
        if self.domain is None:
            return True
        return bool(self.domain(np.asarray(coords, dtype=float)))


@dataclass(frozen=True)
class Overlap:
    """Transition data from `source` chart coordinates to `target` chart coordinates"""

    source: str
    target: str
    forward: Evaluator
    backward: Evaluator
    box: Box
    periodic: Tuple[int, ...] = ()


@dataclass(frozen=True)
class PointRef:
    chart: str
    coords: Tuple[float, ...]

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


@dataclass(frozen=True)
class ChartSample:
    """A batch of points of one chart, row i is sample index i"""

    chart: str
    coords: np.ndarray

    @property
    def count(self) -> int:
        return int(self.coords.shape[0])


@dataclass(frozen=True)
class OverlapSample:
    overlap: Overlap
    coords: np.ndarray

    @property
    def count(self) -> int:
        return int(self.coords.shape[0])


def wrapped_difference(a: np.ndarray, b: np.ndarray, periodic: Sequence[int] = ()) -> np.ndarray:
    """a - b with the periodic coordinates reduced to (-pi, pi]"""
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    for index in periodic:
        diff[..., index] = np.mod(diff[..., index] + math.pi, TWO_PI) - math.pi
    return diff


class ChartedManifold:
    """A manifold given by an atlas of coordinate charts and their transition maps"""

    def __init__(self, name: str, dim: int, charts: Sequence[Chart], overlaps: Sequence[Overlap] = ()):
        if dim <= 0 or dim > MAX_DIMENSION:
            raise ValueError(f"Unsupported manifold dimension: {dim}")
        self.name = name
        self.dim = dim
        self.charts: Dict[str, Chart] = {chart.chart_id: chart for chart in charts}
        self.overlaps: Dict[Tuple[str, str], Overlap] = {(o.source, o.target): o for o in overlaps}
        self.logger = logging.getLogger(__name__)
        for chart in charts:
            if chart.box.dim != dim:
                raise ValueError(f"Chart {chart.chart_id} box has dimension {chart.box.dim}, expected {dim}")

    @property
    def chart_ids(self) -> List[str]:
        return list(self.charts)

    def chart(self, chart_id: str) -> Chart:
        try:
            return self.charts[chart_id]
        except KeyError:
            raise UnknownChart(f"{self.name} has no chart {chart_id!r}") from None

    def overlap(self, source: str, target: str) -> Overlap:
        try:
            return self.overlaps[(source, target)]
        except KeyError:
            raise UnknownChart(f"{self.name} has no overlap {source!r} -> {target!r}") from None

    def point(self, chart_id: str, coords: Sequence[float]) -> PointRef:
        p = PointRef(chart_id, tuple(float(c) for c in coords))
        self.validate(p)
        return p

    def validate(self, p: PointRef) -> None:
        chart = self.chart(p.chart)
        if len(p.coords) != self.dim:
            raise DomainViolation(f"Point has {len(p.coords)} coordinates, {self.name} has dimension {self.dim}")
        if not chart.contains(p.coords):
            raise DomainViolation(f"Point {p.coords} lies outside chart {p.chart} of {self.name}")

    def sample(self, count: int, seed: int) -> List[ChartSample]:
        """Seeded samples from every chart box, in chart order"""
        samples = []
        for index, (chart_id, chart) in enumerate(self.charts.items()):
            rng = np.random.default_rng([seed, index])
            samples.append(ChartSample(chart_id, chart.box.sample(rng, count)))
        return samples

    def overlap_sample(self, count: int, seed: int) -> List[OverlapSample]:
        samples = []
        for index, overlap in enumerate(self.overlaps.values()):
            rng = np.random.default_rng([seed, 1000 + index])
            samples.append(OverlapSample(overlap, overlap.box.sample(rng, count)))
        return samples

    def round_trip_residual(self, count: int = 20, seed: int = 0) -> float:
        """max |backward(forward(x)) - x| over overlap samples, periodic coordinates mod 2 pi"""
        worst = 0.0
        for s in self.overlap_sample(count, seed):
            forward = jax.vmap(s.overlap.forward)
            backward = jax.vmap(s.overlap.backward)
            back = np.asarray(backward(forward(jnp.asarray(s.coords))))
            diff = wrapped_difference(back, s.coords, s.overlap.periodic)
            worst = max(worst, float(np.max(np.abs(diff))))
        return worst

    def __repr__(self) -> str:
        return f"ChartedManifold({self.name!r}, dim={self.dim}, charts={self.chart_ids})"


def as_samples(points: Union[Sequence[PointRef], Sequence[ChartSample]]) -> List[ChartSample]:
    """Group loose points by chart, keeping first-seen chart order"""
    points = list(points)
    if not points or isinstance(points[0], ChartSample):
        return points
    grouped: Dict[str, List[Tuple[float, ...]]] = {}
    for p in points:
        grouped.setdefault(p.chart, []).append(p.coords)
    return [ChartSample(chart, np.asarray(coords, dtype=float)) for chart, coords in grouped.items()]


@dataclass(frozen=True)
class Pointwise:
    """Batch rule of a field computed point by point from other fields.

    `fn` gets the input component arrays (preceded by the coordinates when `with_coords`);
    `project` maps this field's coordinate batch to the inputs' coordinate batch.
    """

    fn: Callable
    inputs: Tuple["TensorField", ...]
    with_coords: bool = False
    project: Optional[Callable[[np.ndarray], np.ndarray]] = None


def drop_last_coordinate(coords: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(coords[:, :-1])


class TensorField:
    """Chart-wise component evaluators of a tensor field of valence (p, q)"""

    def __init__(self, manifold: ChartedManifold, valence: Tuple[int, int],
                 components: Dict[str, Evaluator], name: str = "field",
                 pointwise: Optional[Pointwise] = None):
        self.manifold = manifold
        self.valence = (int(valence[0]), int(valence[1]))
        self.components = dict(components)
        self.name = name
        self.pointwise = pointwise
        self._compiled: Dict[object, Callable] = {}
        self._derived: Dict[object, "TensorField"] = {}
        self._values: Dict[object, np.ndarray] = {}

    @property
    def rank(self) -> int:
        return self.valence[0] + self.valence[1]

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.manifold.dim,) * self.rank

    def evaluator(self, chart: str) -> Evaluator:
        try:
            return self.components[chart]
        except KeyError:
            raise UnknownChart(f"Field {self.name} has no evaluator on chart {chart!r}") from None

    def compiled(self, key: object, build: Callable[[], Callable]) -> Callable:
        fn = self._compiled.get(key)
        if fn is None:
            fn = build()
            self._compiled[key] = fn
        return fn

    def derived(self, key: object, build: Callable[[], "TensorField"]) -> "TensorField":
        """Field built from this one, constructed once per key"""
        field = self._derived.get(key)
        if field is None:
            field = build()
            self._derived[key] = field
        return field

    def batch(self, chart: str, coords: np.ndarray) -> np.ndarray:
        """Component arrays at a batch of points, shape (points,) + self.shape.

        Results are kept per coordinate batch and returned read-only.
        """
        coords = np.ascontiguousarray(coords, dtype=np.float64)
        key = (chart, coords.shape, coords.tobytes())
        values = self._values.get(key)
        if values is None:
            values = self._evaluate(chart, coords)
            values.setflags(write=False)
            if len(self._values) >= BATCH_CACHE_SIZE:
                self._values.pop(next(iter(self._values)))
            self._values[key] = values
        return values

    def _evaluate(self, chart: str, coords: np.ndarray) -> np.ndarray:
        evaluator = self.evaluator(chart)
        rule = self.pointwise
        if rule is None:
            fn = self.compiled(("batch", chart), lambda: jax.jit(jax.vmap(evaluator)))
            return np.array(fn(jnp.asarray(coords)))
        inner = rule.project(coords) if rule.project is not None else coords
        arrays = [jnp.asarray(f.batch(chart, inner)) for f in rule.inputs]
        if rule.with_coords:
            arrays.insert(0, jnp.asarray(coords))
        return np.array(jax.vmap(rule.fn)(*arrays))

    def at(self, p: PointRef) -> np.ndarray:
        self.manifold.validate(p)
        return self.batch(p.chart, p.array[None, :])[0].copy()

    def __repr__(self) -> str:
        return f"TensorField({self.name!r}, valence={self.valence}, charts={list(self.components)})"


class MetricField(TensorField):
    """A symmetric (0,2) field expected to be positive definite"""

    def __init__(self, manifold, components, name="g", pointwise=None):
        super().__init__(manifold, (0, 2), components, name, pointwise)

    @classmethod
    def from_field(cls, field: TensorField) -> "MetricField":
        if field.valence != (0, 2):
            raise ValenceMismatch(f"A metric needs valence (0, 2), got {field.valence}")
        return cls(field.manifold, field.components, field.name, field.pointwise)

    def min_eigenvalue(self, samples: Sequence[ChartSample]) -> float:
        worst = math.inf
        for s in samples:
            values = self.batch(s.chart, s.coords)
            sym = 0.5 * (values + np.swapaxes(values, -1, -2))
            worst = min(worst, float(np.min(np.linalg.eigvalsh(sym))))
        return worst

    def ensure_positive(self, samples: Sequence[ChartSample]) -> None:
        lowest = self.min_eigenvalue(samples)
        if not lowest > 0:
            raise SingularMetric(f"{self.name} is not positive definite (min eigenvalue {lowest:.3e})")


class ComplexStructureField(TensorField):
    """An endomorphism field J with J o J = -Id"""

    def __init__(self, manifold, components, name="J", constant_in_holomorphic_charts=False):
        super().__init__(manifold, (1, 1), components, name)
        self.constant_in_holomorphic_charts = constant_in_holomorphic_charts

    def square_residual(self, samples: Sequence[ChartSample]) -> float:
        worst = 0.0
        for s in samples:
            values = self.batch(s.chart, s.coords)
            square = np.einsum("pij,pjk->pik", values, values)
            worst = max(worst, float(np.max(np.abs(square + np.eye(self.manifold.dim)))))
        return worst


def chartwise_field(manifold: ChartedManifold, valence: Tuple[int, int],
                    fns: Dict[str, Evaluator], name: str = "field") -> TensorField:
    return TensorField(manifold, valence, fns, name)


def coordinate_field(manifold: ChartedManifold, valence: Tuple[int, int],
                     fn: Evaluator, name: str = "field") -> TensorField:
    """The same coordinate expression on every chart"""
    return TensorField(manifold, valence, {chart: fn for chart in manifold.chart_ids}, name)


def constant_field(manifold: ChartedManifold, array, valence: Tuple[int, int], name: str = "const") -> TensorField:
    value = jnp.asarray(array)
    return coordinate_field(manifold, valence, lambda x: value + 0.0 * x[0], name)


def field_map(fn: Callable, *fields: TensorField, valence: Tuple[int, int], name: str = "field",
              with_coords: bool = False, manifold: Optional[ChartedManifold] = None) -> TensorField:
    """Pointwise combination of fields; `fn` receives their component arrays (and x if asked)"""
    manifold = manifold or fields[0].manifold
    charts = [c for c in manifold.chart_ids if all(c in f.components for f in fields)]

    def make(chart):
        evaluators = [f.evaluator(chart) for f in fields]
        if with_coords:
            return lambda x: fn(x, *(e(x) for e in evaluators))
        return lambda x: fn(*(e(x) for e in evaluators))

    return TensorField(manifold, valence, {chart: make(chart) for chart in charts}, name,
                       pointwise=Pointwise(fn, tuple(fields), with_coords))


def standard_complex_structure(m: int) -> np.ndarray:
    """J d/dx_k = d/dy_k on coordinates (x_0..x_{m-1}, y_0..y_{m-1})"""
    J = np.zeros((2 * m, 2 * m))
    for k in range(m):
        J[m + k, k] = 1.0
        J[k, m + k] = -1.0
    return J


@dataclass(frozen=True)
class Jet:
    value: np.ndarray
    first: Optional[np.ndarray] = None
    second: Optional[np.ndarray] = None


def derivative(fn: Evaluator) -> Evaluator:
    """x -> array with out[i, ...] = d fn[...] / dx_i"""
    jac = jax.jacfwd(fn)
    return lambda x: jnp.moveaxis(jac(x), -1, 0)


def eval_jet(field: TensorField, p: PointRef, order: int = 1) -> Jet:
    """Value and exact forward-mode derivatives of the components at p"""
    if order not in (0, 1, 2):
        raise ValueError(f"Jet order must be 0, 1 or 2, got {order}")
    field.manifold.validate(p)
    fn = field.evaluator(p.chart)
    x = jnp.asarray(p.array)

    value = np.asarray(field.compiled(("jet", p.chart, 0), lambda: jax.jit(fn))(x))
    if order == 0:
        return Jet(value)
    first = np.asarray(field.compiled(("jet", p.chart, 1), lambda: jax.jit(derivative(fn)))(x))
    if order == 1:
        return Jet(value, first)
    second = np.asarray(field.compiled(("jet", p.chart, 2), lambda: jax.jit(derivative(derivative(fn))))(x))
    return Jet(value, first, second)


def central_difference(fn: Evaluator, x: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Finite-difference gradient, derivative index first; the cross-check oracle for eval_jet"""
    compiled = jax.jit(fn)
    x = np.asarray(x, dtype=float)
    rows = []
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = step
        rows.append((np.asarray(compiled(x + e)) - np.asarray(compiled(x - e))) / (2.0 * step))
    return np.stack(rows, axis=0)


def _parity(perm: Sequence[int]) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


def _shuffle_terms(k: int, l: int) -> List[Tuple[int, Tuple[int, ...]]]:
    terms = []
    for first in itertools.combinations(range(k + l), k):
        perm = list(first) + [i for i in range(k + l) if i not in first]
        terms.append((_parity(perm), tuple(int(a) for a in np.argsort(perm))))
    return terms


def wedge_arrays(a: jnp.ndarray, b: jnp.ndarray, k: int, l: int) -> jnp.ndarray:
    """Dense components of a k-form wedge an l-form (determinant normalization)"""
    outer = jnp.tensordot(a, b, axes=0)
    if k == 0 or l == 0:
        return outer
    total = None
    for sign, axes in _shuffle_terms(k, l):
        term = sign * jnp.transpose(outer, axes)
        total = term if total is None else total + term
    return total


def _wedge_on_indices(values: Sequence[np.ndarray], degrees: Sequence[int], indices: Tuple[int, ...]):
    """(f_0 ^ ... ^ f_r)(e_i for i in indices) for batched factor values"""
    memo = {}

    def rec(j: int, remaining: Tuple[int, ...]):
        if j == len(values):
            return 1.0
        key = (j, remaining)
        if key in memo:
            return memo[key]
        total = 0.0
        positions = range(len(remaining))
        for chosen in itertools.combinations(positions, degrees[j]):
            rest = [i for i in positions if i not in chosen]
            sign = _parity(list(chosen) + rest)
            coeff = values[j][(slice(None),) + tuple(remaining[i] for i in chosen)]
            total = total + sign * coeff * rec(j + 1, tuple(remaining[i] for i in rest))
        memo[key] = total
        return total

    return rec(0, tuple(indices))


class WedgeForm(TensorField):
    """Exterior product kept as its factor list.

    Dense components are available for differentiation; coefficients on index tuples (the
    top-degree coefficient in particular) are evaluated from the factors directly.
    """

    def __init__(self, factors: Sequence[TensorField], name: str = "wedge"):
        flat: List[TensorField] = []
        for f in factors:
            flat.extend(f.factors if isinstance(f, WedgeForm) else [f])
        for f in flat:
            if f.valence[0] != 0:
                raise ValenceMismatch(f"Cannot wedge {f.name} of valence {f.valence}")
        degrees = tuple(f.valence[1] for f in flat)
        manifold = flat[0].manifold
        if sum(degrees) > manifold.dim:
            raise ValenceMismatch(f"Degree {sum(degrees)} exceeds dimension {manifold.dim}")
        charts = [c for c in manifold.chart_ids if all(c in f.components for f in flat)]

        def combine(*values):
            acc, degree = values[0], degrees[0]
            for val, d in zip(values[1:], degrees[1:]):
                acc = wedge_arrays(acc, val, degree, d)
                degree += d
            return acc

        def make(chart):
            evaluators = [f.evaluator(chart) for f in flat]
            return lambda x: combine(*(ev(x) for ev in evaluators))

        super().__init__(manifold, (0, sum(degrees)), {c: make(c) for c in charts}, name,
                         pointwise=Pointwise(combine, tuple(flat)))
        self.factors = tuple(flat)
        self.degrees = degrees

    def coefficients(self, chart: str, coords: np.ndarray, index_sets: Sequence[Sequence[int]]) -> np.ndarray:
        values = [f.batch(chart, coords) for f in self.factors]
        columns = [_wedge_on_indices(values, self.degrees, tuple(indices)) for indices in index_sets]
        return np.stack([np.broadcast_to(c, (coords.shape[0],)) for c in columns], axis=-1)

    def top_coefficient(self, chart: str, coords: np.ndarray) -> np.ndarray:
        if self.valence[1] != self.manifold.dim:
            raise ValenceMismatch(f"{self.name} has degree {self.valence[1]}, not {self.manifold.dim}")
        return self.coefficients(chart, coords, [tuple(range(self.manifold.dim))])[:, 0]


def wedge(alpha: TensorField, beta: TensorField) -> WedgeForm:
    return WedgeForm([alpha, beta], name=f"{alpha.name}^{beta.name}")


def wedge_power(omega: TensorField, power: int, prefix: Optional[TensorField] = None) -> WedgeForm:
    """prefix ^ omega^power"""
    factors = ([prefix] if prefix is not None else []) + [omega] * power
    return WedgeForm(factors, name=f"{omega.name}^{power}")


def exterior_derivative(form: TensorField) -> TensorField:
    p, k = form.valence
    if p != 0:
        raise ValenceMismatch(f"Exterior derivative needs a form, got valence {form.valence}")
    if k + 1 > form.manifold.dim:
        raise ValenceMismatch(f"d of a {k}-form on a {form.manifold.dim}-manifold")
    return form.derived(("d",), lambda: _exterior_derivative(form, k))


def _exterior_derivative(form: TensorField, k: int) -> TensorField:
    def make(chart):
        grad = derivative(form.evaluator(chart))

        def d(x):
            jac = grad(x)
            total = jac
            for a in range(1, k + 1):
                total = total + (-1) ** a * jnp.moveaxis(jac, 0, a)
            return total

        return d

    return TensorField(form.manifold, (0, k + 1), {c: make(c) for c in form.components}, f"d{form.name}")


def _shared_charts(*fields: TensorField) -> List[str]:
    charts = [c for c in fields[0].manifold.chart_ids if all(c in f.components for f in fields)]
    if not charts:
        raise UnknownChart(f"Fields {[f.name for f in fields]} share no chart")
    return charts


def lie_bracket(X: TensorField, Y: TensorField) -> TensorField:
    for V in (X, Y):
        if V.valence != (1, 0):
            raise ValenceMismatch(f"Lie bracket needs vector fields, {V.name} has valence {V.valence}")

    def make(chart):
        fx, fy = X.evaluator(chart), Y.evaluator(chart)
        dx, dy = derivative(fx), derivative(fy)
        return lambda x: fx(x) @ dy(x) - fy(x) @ dx(x)

    def build():
        return TensorField(X.manifold, (1, 0), {c: make(c) for c in _shared_charts(X, Y)}, f"[{X.name},{Y.name}]")

    return X.derived(("bracket", Y), build)


def _endomorphism_field(phi: TensorField, kind: str) -> None:
    if phi.valence != (1, 1):
        raise ValenceMismatch(f"{kind} needs a (1,1) field, {phi.name} has valence {phi.valence}")


def nijenhuis_endo(phi: TensorField) -> TensorField:
    """[phi, phi](X, Y) = phi^2[X,Y] + [phiX, phiY] - phi[phiX, Y] - phi[X, phiY]; out[i, j, k] on (d_j, d_k)"""
    _endomorphism_field(phi, "nijenhuis_endo")

    def make(chart):
        f = phi.evaluator(chart)
        df = derivative(f)

        def value(x):
            P, D = f(x), df(x)
            return (jnp.einsum("lj,lik->ijk", P, D) - jnp.einsum("lk,lij->ijk", P, D)
                    - jnp.einsum("il,jlk->ijk", P, D) + jnp.einsum("il,klj->ijk", P, D))

        return value

    def build():
        return TensorField(phi.manifold, (1, 2), {c: make(c) for c in phi.components}, f"[{phi.name},{phi.name}]")

    return phi.derived(("nijenhuis_endo",), build)


def nijenhuis_complex(J: TensorField) -> TensorField:
    """N_J(X, Y) = [JX, JY] - J[JX, Y] - J[X, JY] - [X, Y], assembled from coordinate brackets"""
    _endomorphism_field(J, "nijenhuis_complex")

    def make(chart):
        f = J.evaluator(chart)
        df = derivative(f)

        def value(x):
            P, D = f(x), df(x)
            # [J d_j, J d_k], [J d_j, d_k] and [d_j, J d_k] in coordinates
            bracket_jj = jnp.einsum("lj,lik->ijk", P, D) - jnp.einsum("lk,lij->ijk", P, D)
            bracket_jx = -jnp.einsum("kij->ijk", D)
            bracket_xj = jnp.einsum("jik->ijk", D)
            return bracket_jj - jnp.einsum("il,ljk->ijk", P, bracket_jx) - jnp.einsum("il,ljk->ijk", P, bracket_xj)

        return value

    def build():
        return TensorField(J.manifold, (1, 2), {c: make(c) for c in J.components}, f"N_{J.name}")

    return J.derived(("nijenhuis_complex",), build)


def nijenhuis_on_fields(J: TensorField, X: TensorField, Y: TensorField, convention: str = "complex") -> TensorField:
    """Nijenhuis expression evaluated literally on two vector fields through Lie brackets"""
    JX = field_map(lambda j, v: j @ v, J, X, valence=(1, 0), name=f"{J.name}{X.name}")
    JY = field_map(lambda j, v: j @ v, J, Y, valence=(1, 0), name=f"{J.name}{Y.name}")
    parts = [lie_bracket(JX, JY), lie_bracket(JX, Y), lie_bracket(X, JY), lie_bracket(X, Y)]
    if convention == "complex":
        return field_map(lambda j, a, b, c, d: a - j @ b - j @ c - d, J, *parts, valence=(1, 0), name="N(X,Y)")
    if convention == "endo":
        return field_map(lambda j, a, b, c, d: j @ (j @ d) + a - j @ b - j @ c, J, *parts,
                         valence=(1, 0), name="[J,J](X,Y)")
    raise ValueError(f"Unknown Nijenhuis convention: {convention}")


def contract_vectors(tensor: TensorField, X: TensorField, Y: TensorField) -> TensorField:
    """T(X, Y) for a (1,2) tensor"""
    return field_map(lambda t, x, y: jnp.einsum("ijk,j,k->i", t, x, y), tensor, X, Y, valence=(1, 0), name="T(X,Y)")


@dataclass(frozen=True)
class SmoothMap:
    """Chart-wise coordinate expression of a map between charted manifolds"""

    source: ChartedManifold
    target: ChartedManifold
    charts: Dict[str, Tuple[str, Evaluator]]
    name: str = "map"

    @classmethod
    def identity(cls, manifold: ChartedManifold) -> "SmoothMap":
        return cls(manifold, manifold, {c: (c, lambda x: x) for c in manifold.chart_ids}, "id")


def pullback(f: SmoothMap, T: TensorField) -> TensorField:
    if T.valence[0] != 0:
        raise ValenceMismatch(f"Pullback needs a covariant field, {T.name} has valence {T.valence}")
    q = T.valence[1]

    def make(chart):
        target_chart, fn = f.charts[chart]
        ev = T.evaluator(target_chart)
        jac = jax.jacfwd(fn)

        def value(x):
            out, J = ev(fn(x)), jac(x)
            for slot in range(q):
                out = jnp.moveaxis(jnp.tensordot(out, J, axes=([slot], [0])), -1, slot)
            return out

        return value

    def build():
        charts = [c for c, (target_chart, _) in f.charts.items() if target_chart in T.components]
        pulled = TensorField(f.source, (0, q), {c: make(c) for c in charts}, f"{f.name}*{T.name}")
        pulled.source_map = f
        return pulled

    return T.derived(("pullback", id(f)), build)


def transform_components(value: jnp.ndarray, jac: jnp.ndarray, valence: Tuple[int, int]) -> jnp.ndarray:
    """Components at x in source coordinates re-expressed in target coordinates, jac = d(target)/d(source)"""
    p, q = valence
    out = value
    if q:
        inverse = jnp.linalg.inv(jac)
    for slot in range(p):
        out = jnp.moveaxis(jnp.tensordot(jac, out, axes=([1], [slot])), 0, slot)
    for slot in range(p, p + q):
        out = jnp.moveaxis(jnp.tensordot(out, inverse, axes=([slot], [0])), -1, slot)
    return out


def transition_defect(field: TensorField, overlap: Overlap, coords: np.ndarray) -> np.ndarray:
    """Per-point max-norm of the tensor transformation law defect on one overlap"""
    src = field.evaluator(overlap.source)
    dst = field.evaluator(overlap.target)
    jacobian = jax.jacfwd(overlap.forward)

    def defect(x):
        y = overlap.forward(x)
        return transform_components(src(x), jacobian(x), field.valence) - dst(y)

    fn = field.compiled(("transition", overlap.source, overlap.target),
                        lambda: jax.jit(jax.vmap(defect)))
    values = np.abs(np.asarray(fn(jnp.asarray(coords))))
    return values.reshape(values.shape[0], -1).max(axis=1)


def transition_residual(field: TensorField, samples: Sequence[OverlapSample]) -> float:
    worst = 0.0
    for s in samples:
        if s.overlap.source not in field.components or s.overlap.target not in field.components:
            raise UnknownChart(f"{field.name} is not defined on both charts of {s.overlap.source}->{s.overlap.target}")
        worst = max(worst, float(np.max(transition_defect(field, s.overlap, s.coords))))
    return worst


def min_topform_magnitude(omega: TensorField, points: Union[Sequence[PointRef], Sequence[ChartSample]]) -> float:
    """Smallest |coefficient of d/dx_0 ^ ... ^ d/dx_{dim-1}| over the points"""
    dim = omega.manifold.dim
    if omega.valence != (0, dim):
        raise ValenceMismatch(f"{omega.name} has valence {omega.valence}, not a top form")
    magnitudes = []
    for s in as_samples(points):
        if isinstance(omega, WedgeForm):
            coeff = omega.top_coefficient(s.chart, s.coords)
        else:
            coeff = omega.batch(s.chart, s.coords)[(slice(None),) + tuple(range(dim))]
        magnitudes.append(np.abs(coeff))
    if not magnitudes:
        return 0.0
    return float(np.min(np.concatenate(magnitudes)))


def christoffel_evaluator(g_fn: Evaluator) -> Evaluator:
    """x -> Gamma[m, i, j] of the Levi-Civita connection"""
    dg = derivative(g_fn)

    def gamma(x):
        g, d = g_fn(x), dg(x)
        lowered = jnp.transpose(d, (1, 0, 2)) + jnp.transpose(d, (2, 1, 0)) - d
        n = g.shape[0]
        return 0.5 * jnp.linalg.solve(g, lowered.reshape(n, n * n)).reshape(n, n, n)

    return gamma


def riemann_evaluator(g_fn: Evaluator) -> Evaluator:
    """x -> R[i, j, k, l] = R^i_{jkl}"""
    gamma = christoffel_evaluator(g_fn)
    dgamma = derivative(gamma)

    def riemann(x):
        G, dG = gamma(x), dgamma(x)
        return (jnp.einsum("kilj->ijkl", dG) - jnp.einsum("likj->ijkl", dG)
                + jnp.einsum("ikp,plj->ijkl", G, G) - jnp.einsum("ilp,pkj->ijkl", G, G))

    return riemann


def _ensure_regular(g: np.ndarray, name: str) -> None:
    """Raise SingularMetric unless every metric in the (possibly batched) array is well conditioned"""
    eigenvalues = np.linalg.eigvalsh(0.5 * (g + np.swapaxes(g, -1, -2)))
    lowest, highest = eigenvalues[..., 0], eigenvalues[..., -1]
    if not np.all(lowest > 0) or np.any(highest / lowest > MAX_CONDITION):
        raise SingularMetric(f"{name} is singular or not positive definite "
                             f"(eigenvalues from {float(np.min(lowest)):.3e} to {float(np.max(highest)):.3e})")


class ConnectionField(TensorField):
    """A field built from the Levi-Civita connection of `metric`; batches check the metric first"""

    def __init__(self, metric: TensorField, valence: Tuple[int, int], components: Dict[str, Evaluator], name: str):
        super().__init__(metric.manifold, valence, components, name)
        self.metric = metric

    def _evaluate(self, chart: str, coords: np.ndarray) -> np.ndarray:
        _ensure_regular(self.metric.batch(chart, coords), self.metric.name)
        return super()._evaluate(chart, coords)


def _require_metric(g: TensorField, kind: str) -> None:
    if g.valence != (0, 2):
        raise ValenceMismatch(f"{kind} needs a metric, {g.name} has valence {g.valence}")


def levi_civita(g: TensorField, p: PointRef) -> np.ndarray:
    _require_metric(g, "levi_civita")
    _ensure_regular(g.at(p), g.name)
    fn = g.compiled(("christoffel", p.chart), lambda: jax.jit(christoffel_evaluator(g.evaluator(p.chart))))
    return np.asarray(fn(jnp.asarray(p.array)))


def christoffel_field(g: TensorField) -> TensorField:
    _require_metric(g, "christoffel_field")

    def build():
        return ConnectionField(g, (1, 2), {c: christoffel_evaluator(g.evaluator(c)) for c in g.components},
                               f"Gamma({g.name})")

    return g.derived(("christoffel",), build)


def covariant_derivative(g: TensorField, xi: TensorField) -> TensorField:
    """(nabla xi)[i, j] = i-th component of nabla_{d_j} xi"""
    _require_metric(g, "covariant_derivative")
    if xi.valence != (1, 0):
        raise ValenceMismatch(f"covariant_derivative needs a vector field, {xi.name} has valence {xi.valence}")

    def make(chart):
        gamma = christoffel_evaluator(g.evaluator(chart))
        f = xi.evaluator(chart)
        df = derivative(f)
        return lambda x: df(x).T + jnp.einsum("ijk,k->ij", gamma(x), f(x))

    def build():
        return ConnectionField(g, (1, 1), {c: make(c) for c in _shared_charts(g, xi)}, f"nabla {xi.name}")

    return g.derived(("nabla", xi), build)


def metric_covariant_derivative(g: TensorField) -> TensorField:
    """(nabla g)[k, i, j] = (nabla_k g)_ij, identically zero for the Levi-Civita connection"""
    _require_metric(g, "metric_covariant_derivative")

    def make(chart):
        g_fn = g.evaluator(chart)
        gamma = christoffel_evaluator(g_fn)
        dg = derivative(g_fn)

        def value(x):
            G, metric, d = gamma(x), g_fn(x), dg(x)
            return d - jnp.einsum("lki,lj->kij", G, metric) - jnp.einsum("lkj,il->kij", G, metric)

        return value

    return g.derived(("nabla g",),
                     lambda: ConnectionField(g, (0, 3), {c: make(c) for c in g.components}, f"nabla {g.name}"))


def torsion_field(g: TensorField) -> TensorField:
    return field_map(lambda G: G - jnp.swapaxes(G, 1, 2), christoffel_field(g), valence=(1, 2), name="torsion")


def curvature(g: TensorField, p: PointRef) -> Tuple[np.ndarray, np.ndarray, float]:
    """Riemann tensor, Ricci tensor and scalar curvature at p"""
    _require_metric(g, "curvature")
    metric = g.at(p)
    _ensure_regular(metric, g.name)
    fn = g.compiled(("riemann", p.chart), lambda: jax.jit(riemann_evaluator(g.evaluator(p.chart))))
    riemann = np.asarray(fn(jnp.asarray(p.array)))
    ricci = np.einsum("ijil->jl", riemann)
    scalar = float(np.einsum("jl,jl->", np.linalg.inv(metric), ricci))
    return riemann, ricci, scalar


def ricci_field(g: TensorField) -> TensorField:
    _require_metric(g, "ricci_field")

    def make(chart):
        riemann = riemann_evaluator(g.evaluator(chart))
        return lambda x: jnp.einsum("ijil->jl", riemann(x))

    return g.derived(("ricci",),
                     lambda: ConnectionField(g, (0, 2), {c: make(c) for c in g.components}, f"Ric({g.name})"))


def lie_derivative_metric(g: TensorField, X: TensorField) -> TensorField:
    """(L_X g)_ij = X^k d_k g_ij + g_kj d_i X^k + g_ik d_j X^k"""

    def make(chart):
        g_fn, x_fn = g.evaluator(chart), X.evaluator(chart)
        dg, dx = derivative(g_fn), derivative(x_fn)

        def value(x):
            metric, v, D = g_fn(x), x_fn(x), dx(x)
            return (jnp.einsum("k,kij->ij", v, dg(x)) + jnp.einsum("ik,kj->ij", D, metric)
                    + jnp.einsum("jk,ik->ij", D, metric))

        return value

    def build():
        return TensorField(g.manifold, (0, 2), {c: make(c) for c in _shared_charts(g, X)}, f"L_{X.name}{g.name}")

    return g.derived(("lie", X), build)


def max_norm(field: TensorField, samples: Sequence[ChartSample]) -> Tuple[int, float]:
    """(points evaluated, max over points of the component max-norm)"""
    points, peaks = 0, [0.0]
    for s in samples:
        values = np.abs(field.batch(s.chart, s.coords))
        points += s.count
        if values.size:
            peaks.append(float(np.max(values)))
    return points, float(np.max(peaks))


def probe_samples(manifold: ChartedManifold, count: int = 4, seed: int = 7) -> List[ChartSample]:
    """Small fixed sample used by constructors to validate their preconditions"""
    return manifold.sample(count, seed)


def pointwise_residual(fn: Callable, *fields: TensorField, samples: Sequence[ChartSample],
                       with_coords: bool = False) -> Tuple[int, float]:
    """max-norm of fn(*components) over the samples"""
    residual = field_map(fn, *fields, valence=(0, 0), name="residual", with_coords=with_coords)
    return max_norm(residual, samples)


def covariance_residual(target: TensorField, sources: Sequence[TensorField], samples: Sequence[OverlapSample],
                        rule: Callable[[Overlap], Callable]) -> float:
    """Transition check for fields that change by a gauge rule rather than tensorially.

    `rule(overlap)` returns a function of (x, *transformed source values) giving the expected
    target components at forward(x); x is in source-chart coordinates.
    """
    worst = 0.0
    for s in samples:
        ov = s.overlap
        evaluators = [f.evaluator(ov.source) for f in sources]
        dst = target.evaluator(ov.target)
        jacobian = jax.jacfwd(ov.forward)
        expected = rule(ov)

        def defect(x, evaluators=evaluators, dst=dst, jacobian=jacobian, expected=expected, ov=ov):
            jac = jacobian(x)
            transformed = [transform_components(ev(x), jac, f.valence) for ev, f in zip(evaluators, sources)]
            return expected(x, *transformed) - dst(ov.forward(x))

        values = np.abs(np.asarray(jax.jit(jax.vmap(defect))(jnp.asarray(s.coords))))
        worst = max(worst, float(np.max(values)))
    return worst
