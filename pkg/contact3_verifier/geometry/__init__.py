from .kernel import (
    Box,
    Chart,
    ChartedManifold,
    ChartSample,
    ComplexStructureField,
    MetricField,
    Overlap,
    PointRef,
    SmoothMap,
    TensorField,
    WedgeForm,
)
from .pipeline import ModelGeometry

__all__ = [
    "Box",
    "Chart",
    "ChartedManifold",
    "ChartSample",
    "ComplexStructureField",
    "MetricField",
    "ModelGeometry",
    "Overlap",
    "PointRef",
    "SmoothMap",
    "TensorField",
    "WedgeForm",
]
