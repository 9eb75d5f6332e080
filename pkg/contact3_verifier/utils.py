import logging
import sys
from typing import Optional

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logging(level: str = "INFO", stream=None) -> logging.Logger:
    """Configure root logging once and return the package logger"""
    numeric_level = getattr(logging, str(level).upper(), None)
    if not isinstance(numeric_level, int):
        raise ValueError(f"Invalid log level: {level}")

    root = logging.getLogger()
    if not any(getattr(h, "_contact3", False) for h in root.handlers):
        handler = logging.StreamHandler(stream or sys.stderr)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        handler._contact3 = True
        root.addHandler(handler)
    root.setLevel(numeric_level)

    # jax is chatty at INFO about backends
    logging.getLogger("jax").setLevel(max(numeric_level, logging.WARNING))

    logger = logging.getLogger("contact3_verifier")
    logger.setLevel(numeric_level)
    return logger


def relative_spread(values) -> float:
    """(max - min) / max |value|, 0 for an all-zero sequence"""
    values = [float(v) for v in values]
    if not values:
        return 0.0
    scale = max(abs(v) for v in values)
    if scale == 0.0:
        return 0.0
    return (max(values) - min(values)) / scale


def format_residual(value: Optional[float]) -> str:
    if value is None or value < 0:
        return "n/a"
    return f"{value:.3e}"
