class VerifierError(Exception):
    """Base class for all verifier errors"""


class GeometryError(VerifierError):
    """A geometric construction could not be carried out"""


class UnknownChart(GeometryError):
    pass


class DomainViolation(GeometryError):
    pass


class ValenceMismatch(GeometryError):
    pass


class SingularMetric(GeometryError):
    pass


class InvalidWeight(GeometryError):
    pass


class GaugeInconsistency(GeometryError):
    pass


class DegenerateVerticalDistribution(GeometryError):
    pass


class DegenerateHorizontal(GeometryError):
    pass


class NonInvariantCurvature(GeometryError):
    pass


class KuoHypothesisViolated(GeometryError):
    pass


class NotUnitSphereParameter(GeometryError):
    pass


class UnsupportedDimension(GeometryError):
    pass


class CalibrationFailure(GeometryError):
    pass


class ConfigurationError(VerifierError):
    """Invalid command line or configuration file input"""


class UnknownModel(ConfigurationError):
    pass


class UnknownSuite(ConfigurationError):
    pass


class IoFailure(VerifierError):
    pass
