"""Hybrid dynamic models of price-responsive electricity demand.

Regime-split ARX identification, log-price Hammerstein fits for price
spikes, supporting statistics, forecasting, spike-recurrence profiles and
deadweight-loss geometry.
"""

__version__ = "0.1.0"

from .exceptions import HybridDRError
from .ingest import AlignedSeries, load_csv, parse_csv
from .sysid import HammersteinARX, RegimeThreshold, TwoStepARX, two_step_arx

__all__ = ["AlignedSeries", "HybridDRError", "HammersteinARX", "RegimeThreshold", "TwoStepARX", "load_csv", "parse_csv",
           "two_step_arx", "__version__"]
