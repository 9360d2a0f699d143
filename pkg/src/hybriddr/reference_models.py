"""Reference coefficient sets for a commercial/industrial load.

Both models run on a 15-minute grid. The moderate-price model is linear in
price; the peak model (2:00-2:30pm price window) responds to log price after
a one-hour delay. Noise levels are the reported residual RMSEs.
"""

from .sysid.arx import ArxModel

MODERATE_MODEL = ArxModel(
    ar_lags=(1, 3, 5),
    ar_coeffs=(0.81268, 0.046086, 0.036614),
    x_lags=(1, 2),
    x_coeffs=(-0.8555, 0.5273),
    intercept=260.126,
    transform="identity",
    noise_std=301.0,
)

# autoregression alone, as reported before the price step
MODERATE_AR_ONLY = ArxModel(
    ar_lags=(1, 3, 5),
    ar_coeffs=(0.81268, 0.046086, 0.036614),
    intercept=238.07,
    noise_std=301.0,
)

PEAK_MODEL = ArxModel(
    ar_lags=(1, 2, 4),
    ar_coeffs=(0.40153, -0.23826, 0.25124),
    x_lags=(4,),
    x_coeffs=(-220.1,),
    intercept=1961.66,
    transform="log",
    noise_std=281.0,
)

REGIME_THRESHOLD = 144.4187
