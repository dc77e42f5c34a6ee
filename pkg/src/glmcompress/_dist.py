"""Tail probabilities for Wald and Student-t statistics."""

from __future__ import annotations

import numpy as np
from scipy import special

P_FLOOR = 1e-300


def normal_two_sided(z):
    """P(|Z| >= |z|) for standard normal Z, via the complementary error function."""
    z = np.abs(np.asarray(z, dtype=float))
    return special.erfc(z / np.sqrt(2.0))


def t_two_sided(t, df):
    """P(|T| >= |t|) for Student-t with ``df`` degrees of freedom."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        x = df / (df + t * t)
    x = np.where(np.isinf(t), 0.0, x)
    return special.betainc(0.5 * df, 0.5, x)


def t_upper(t: float, df: float) -> float:
    """P(T >= t) for Student-t with ``df`` degrees of freedom."""
    half = 0.5 * float(t_two_sided(t, df))
    return half if t >= 0 else 1.0 - half


def floor_p(p):
    """Clamp p-values into [1e-300, 1] so that -log10(p) stays finite."""
    p = np.asarray(p, dtype=float)
    p = np.where(np.isnan(p), 1.0, p)
    return np.clip(p, P_FLOOR, 1.0)
