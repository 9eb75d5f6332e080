"""Calibration of the contact-metric constant kappa in d eta_2 = kappa g_Q(Phi_2 (x) Id)."""
import logging
from typing import Callable, Optional

import numpy as np

from .exceptions import CalibrationFailure
from .geometry.kernel import exterior_derivative
from .geometry.pipeline import ModelGeometry
from .library import load_model

logger = logging.getLogger(__name__)

CANDIDATES = (1.0, 2.0)
CALIBRATION_TOLERANCE = 1e-6
CALIBRATION_MODEL = "flat3"


def calibrate_kappa(geometry: Optional[ModelGeometry] = None,
                    perturbation: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> float:
    """kappa in {1, 2} from the flat model at the origin with phi = 0.

    `perturbation` maps the g_Q matrix at the calibration point to the one used, so a
    deliberately wrong metric can be fed in.
    """
    geometry = geometry or ModelGeometry(load_model(CALIBRATION_MODEL))
    total = geometry.bundle.total
    chart = total.chart_ids[0]
    p = total.point(chart, np.zeros(total.dim))

    triple = geometry.triple
    phi2, _, eta2 = triple.structure(2)
    d_eta = np.asarray(exterior_derivative(eta2).at(p))
    metric = np.asarray(triple.g_Q.at(p))
    if perturbation is not None:
        metric = np.asarray(perturbation(metric))
    nu = np.asarray(phi2.at(p)).T @ metric

    residuals = {kappa: float(np.max(np.abs(d_eta - kappa * nu))) for kappa in CANDIDATES}
    logger.debug(f"Calibration residuals: {residuals}")
    fitting = [kappa for kappa, residual in residuals.items() if residual <= CALIBRATION_TOLERANCE]
    if len(fitting) != 1:
        raise CalibrationFailure(
            f"Expected exactly one kappa in {CANDIDATES} to fit, residuals {residuals}")
    logger.info(f"Calibrated kappa = {fitting[0]:g} on {geometry.model.name}")
    return fitting[0]
