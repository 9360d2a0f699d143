"""System identification: regimes, least squares, ARX/Hammerstein fits, transfer functions."""

from .arx import (
    ArxFit,
    ArxModel,
    CrossValidation,
    RegimeSplit,
    apply_transform,
    build_rows,
    cross_validate,
    evaluate,
    fit_ar,
    fit_arrays,
    moderate_rows,
    peak_rows,
    select_lags,
    split_regimes,
    two_step_arx,
)
from .estimators import HammersteinARX, RegimeThreshold, TwoStepARX
from .ols import OlsFit, ols
from .tf import Stability, TransferFunction, stability, to_transfer_function

__all__ = [
    "ArxFit", "ArxModel", "CrossValidation", "HammersteinARX", "OlsFit", "RegimeSplit",
    "RegimeThreshold", "Stability", "TransferFunction", "TwoStepARX", "apply_transform",
    "build_rows", "cross_validate", "evaluate", "fit_ar", "fit_arrays", "moderate_rows",
    "ols", "peak_rows", "select_lags", "split_regimes", "stability", "to_transfer_function",
    "two_step_arx",
]
