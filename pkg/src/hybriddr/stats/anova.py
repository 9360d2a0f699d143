"""One-way analysis of variance."""

import sys
from dataclasses import asdict, dataclass

import numpy as np

from ..exceptions import DegenerateInputError, InsufficientDataError
from .distributions import f_tail_p


@dataclass(frozen=True)
class AnovaTable:
    ss_groups: float
    ss_error: float
    ss_total: float
    df_groups: int
    df_error: int
    df_total: int
    ms_groups: float
    ms_error: float
    f_stat: float
    p_value: float

    def to_dict(self):
        return asdict(self)

    def rows(self):
        """Source/SS/DF/MS/F/p rows in the usual printed layout."""
        return [
            ("Groups", self.ss_groups, self.df_groups, self.ms_groups, self.f_stat, self.p_value),
            ("Error", self.ss_error, self.df_error, self.ms_error, None, None),
            ("Total", self.ss_total, self.df_total, None, None, None),
        ]


def anova_oneway(groups) -> AnovaTable:
    """Between/within decomposition of the groups' variance and the F test.

    When the error sum of squares is zero but the groups differ, F is
    reported as the largest finite float with p = 0.
    """
    groups = [np.asarray(g, dtype=float).ravel() for g in groups]
    if len(groups) < 2:
        raise InsufficientDataError("ANOVA needs at least 2 groups")
    if any(g.size == 0 for g in groups):
        raise InsufficientDataError("every ANOVA group needs at least one sample")
    sizes = np.array([g.size for g in groups])
    n = int(sizes.sum())
    k = len(groups)
    df_groups, df_error = k - 1, n - k
    if df_error < 1:
        raise InsufficientDataError("ANOVA needs more samples than groups")
    grand = np.concatenate(groups).mean()
    means = np.array([g.mean() for g in groups])
    ss_groups = float(np.sum(sizes * (means - grand) ** 2))
    ss_error = float(sum(np.sum((g - m) ** 2) for g, m in zip(groups, means)))
    ss_total = ss_groups + ss_error
    ms_groups = ss_groups / df_groups
    ms_error = ss_error / df_error
    if ms_error == 0.0:
        if ms_groups == 0.0:
            raise DegenerateInputError("all groups are constant and equal: F is undefined")
        f_stat, p = sys.float_info.max, 0.0
    else:
        f_stat = ms_groups / ms_error
        p = f_tail_p(f_stat, df_groups, df_error)
    return AnovaTable(ss_groups, ss_error, ss_total, df_groups, df_error, n - 1,
                      ms_groups, ms_error, f_stat, p)
