from __future__ import annotations

import numpy as np
from scipy.special import betainc

from ..errors import ValidationError


def f_sf(F, df1: float, df2: float):
    """Survival function of the F distribution through the regularised
    incomplete beta function."""
    F = np.asarray(F, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = df2 / (df2 + df1 * F)
    p = betainc(df2 / 2.0, df1 / 2.0, np.where(np.isinf(F), 0.0, x))
    return np.where(np.isinf(F), 0.0, p)


def anova_f(a, b):
    """One-way two-group ANOVA, column-wise for 2-D inputs (rows = observations).

    Zero within-group variance gives ``F = inf, p = 0`` when the group means
    differ, and ``F = 0, p = 1`` when they do not.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise ValidationError("each group needs at least two observations")
    na, nb = a.shape[0], b.shape[0]
    n = na + nb
    ma, mb = a.mean(axis=0), b.mean(axis=0)
    grand = (na * ma + nb * mb) / n
    ssb = na * (ma - grand) ** 2 + nb * (mb - grand) ** 2
    ssw = ((a - ma) ** 2).sum(axis=0) + ((b - mb) ** 2).sum(axis=0)
    df2 = n - 2
    msw = ssw / df2
    # spread below round-off of the data counts as zero
    tiny = 1e-13 * np.maximum(np.abs(grand), 1.0) ** 2
    zero_w = msw <= tiny
    zero_b = ssb <= tiny
    with np.errstate(divide="ignore", invalid="ignore"):
        F = np.where(zero_w, np.where(zero_b, 0.0, np.inf), ssb / np.where(zero_w, 1.0, msw))
    F = np.where(zero_b & ~zero_w, 0.0, F)
    p = f_sf(F, 1.0, df2)
    if np.ndim(F) == 0:
        return float(F), float(p)
    return F, p
