"""calibcc: confidence calibration toolkit for code-completion telemetry.

Labels logged completions with a preserved-ratio outcome, fits static and
online Platt-scaling calibrators, and evaluates them with ECE/Brier/BSS/MCE
via windowed progressive validation.
"""

from calibcc.calibration import PlattCalibrator, PlattParams, calibrate, fit_platt
from calibcc.labeling import label_record, levenshtein, preserved_ratio, sequence_confidence
from calibcc.metrics import BaseRateReference, MetricReport, bin_predictions, brier, bss, ece, mce
from calibcc.telemetry import InteractionRecord, load_stream, normalize_language, parse_record

__version__ = "0.1.0"

__all__ = [
    "PlattCalibrator",
    "PlattParams",
    "calibrate",
    "fit_platt",
    "label_record",
    "levenshtein",
    "preserved_ratio",
    "sequence_confidence",
    "BaseRateReference",
    "MetricReport",
    "bin_predictions",
    "brier",
    "bss",
    "ece",
    "mce",
    "InteractionRecord",
    "load_stream",
    "normalize_language",
    "parse_record",
]
