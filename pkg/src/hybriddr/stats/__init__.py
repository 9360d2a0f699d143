"""Descriptive and inferential statistics for price/load series."""

from .anova import AnovaTable, anova_oneway
from .correlation import (
    AcfResult,
    acf,
    avg_change_after_surge,
    avg_change_profile,
    durbin_levinson,
    lagged_correlation,
    pacf,
    pearson,
    post_surge_groups,
    price_jumps,
    surge_onsets,
)
from .descriptive import (
    BoxSummary,
    MomentStats,
    box_summary,
    hourly_summary,
    median_by_time_of_day,
    moments,
    normal_probability_plot,
    quantile,
    valid_values,
)
from .distributions import Z_975, betainc, f_tail_p, normal_ppf, t_tail_p

__all__ = [
    "AcfResult", "AnovaTable", "BoxSummary", "MomentStats", "Z_975",
    "acf", "anova_oneway", "avg_change_after_surge", "avg_change_profile", "betainc",
    "box_summary", "durbin_levinson", "f_tail_p", "hourly_summary", "lagged_correlation",
    "median_by_time_of_day", "moments", "normal_ppf", "normal_probability_plot", "pacf",
    "pearson", "post_surge_groups", "price_jumps", "quantile", "surge_onsets",
    "t_tail_p", "valid_values",
]
