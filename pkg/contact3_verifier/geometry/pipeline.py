import logging
from functools import cached_property
from typing import List, Optional

from .circle_bundle import CircleBundleAtlas, HatakeyamaStructure, build_bundle, hatakeyama, ik_connection
from .complex_contact import (
    AssociatedMetricData,
    AtlasValidation,
    NormalizedContactData,
    OmegaStructure,
    VerticalFrame,
    associated_metric,
    curvature_form,
    gauge,
    normalize,
    omega_structure,
    validate_atlas,
    vertical_frame,
)
from .cone import ConeManifold, HyperhermitianData, build_cone, build_hyperhermitian
from .kernel import ChartSample, MetricField, SmoothMap, TensorField
from .triple_structure import (
    AlmostContactTriple,
    KobayashiForms,
    PsiXi,
    ThirdStructure,
    assemble_triple,
    bundle_metric,
    kobayashi_contact,
    phi_two,
    psi_xi,
    third_structure,
)

PROBE_COUNT = 4
PROBE_SEED = 7


class ModelGeometry:
    """Every construction for one model, built on first use and kept"""

    def __init__(self, model):
        self.model = model
        self.logger = logging.getLogger(__name__)

    @property
    def atlas(self):
        return self.model.atlas

    @property
    def weight(self):
        return self.model.weight

    @property
    def n(self) -> int:
        return self.model.atlas.n

    @cached_property
    def base_probe(self) -> List[ChartSample]:
        return self.atlas.base.sample(PROBE_COUNT, PROBE_SEED)

    @cached_property
    def bundle_probe(self) -> List[ChartSample]:
        return self.bundle.total.sample(PROBE_COUNT, PROBE_SEED)

    @cached_property
    def cone_probe(self) -> List[ChartSample]:
        return self.cone.total.sample(PROBE_COUNT, PROBE_SEED)

    @cached_property
    def validation(self) -> AtlasValidation:
        return validate_atlas(self.atlas, self.weight)

    @cached_property
    def normalized(self) -> NormalizedContactData:
        return normalize(self.atlas, self.weight, self.base_probe)

    @cached_property
    def sigma(self) -> TensorField:
        return gauge(self.weight, self.base_probe)

    @cached_property
    def omega_structure(self) -> OmegaStructure:
        return omega_structure(self.normalized, self.sigma)

    @cached_property
    def frame(self) -> VerticalFrame:
        return vertical_frame(self.omega_structure, self.normalized, self.base_probe)

    @cached_property
    def metric(self) -> AssociatedMetricData:
        self.logger.debug(f"Building associated metric for {self.model.name}")
        return associated_metric(self.atlas, self.normalized, self.omega_structure, self.frame,
                                 self.model.metric_hint, self.base_probe)

    @cached_property
    def curvature(self) -> TensorField:
        return curvature_form(self.weight)

    @cached_property
    def bundle(self) -> CircleBundleAtlas:
        return build_bundle(self.atlas, self.weight, self.base_probe)

    @cached_property
    def eta1(self) -> TensorField:
        return ik_connection(self.bundle, self.sigma)

    @cached_property
    def hatakeyama(self) -> HatakeyamaStructure:
        return hatakeyama(self.bundle, self.eta1, self.atlas.J, self.sigma, self.base_probe)

    @cached_property
    def kobayashi(self) -> KobayashiForms:
        return kobayashi_contact(self.bundle, self.normalized)

    @cached_property
    def psi_xi(self) -> PsiXi:
        return psi_xi(self.bundle, self.metric, self.frame, self.sigma)

    @cached_property
    def phi2(self) -> TensorField:
        return phi_two(self.hatakeyama, self.psi_xi, self.kobayashi)

    @cached_property
    def third(self) -> ThirdStructure:
        return third_structure(self.hatakeyama, self.phi2, self.psi_xi, self.kobayashi, self.bundle_probe)

    @cached_property
    def g_Q(self) -> MetricField:
        return bundle_metric(self.bundle, self.metric.g_Z, self.eta1, self.bundle_probe)

    @cached_property
    def triple(self) -> AlmostContactTriple:
        return assemble_triple(self.hatakeyama, self.phi2, self.psi_xi, self.kobayashi, self.third, self.g_Q)

    @cached_property
    def cone(self) -> ConeManifold:
        return build_cone(self.bundle)

    @cached_property
    def hyper(self) -> HyperhermitianData:
        return build_hyperhermitian(self.cone, self.triple, self.atlas, self.weight, self.cone_probe)

    @cached_property
    def cone_map(self) -> Optional[SmoothMap]:
        target = self.model.target
        if target is None:
            return None
        return SmoothMap(self.cone.total, target.manifold,
                         {chart: (target.target_chart, fn) for chart, fn in target.chart_maps.items()},
                         name="F")

    def base_samples(self, count: int, seed: int) -> List[ChartSample]:
        return self.atlas.base.sample(count, seed)

    def bundle_samples(self, count: int, seed: int) -> List[ChartSample]:
        return self.bundle.total.sample(count, seed)

    def cone_samples(self, count: int, seed: int) -> List[ChartSample]:
        return self.cone.total.sample(count, seed)
