"""Bandwidth rules for the two-step estimator.

The first-step bandwidth ``b0`` (regression) and second-step bandwidth
``b1`` (density) are known only up to order, so every closed-form rule takes a
multiplicative constant (``c0``, ``c1``; default 1). The risk bound ``R_n`` is
exposed so the closed forms can be checked against a numeric minimiser.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ZeroCurvature
from .kernels import KernelConstants

__all__ = [
    "BandwidthSource",
    "BandwidthPlan",
    "A11Diagnostics",
    "rn_risk",
    "amse_b1",
    "b0_star",
    "b0_star_branches",
    "b1_star_rate",
    "b1_amise_plugin",
    "rn_argmin_numeric",
    "check_a11",
]


class BandwidthSource(str, Enum):
    CLOSED_FORM = "closed_form"
    NUMERIC_MIN = "numeric_min"
    AMISE_PLUGIN = "amise_plugin"
    MANUAL = "manual"


@dataclass(frozen=True)
class BandwidthPlan:
    b0: float
    b1: float
    c0: float = 1.0
    c1: float = 1.0
    source: BandwidthSource = BandwidthSource.CLOSED_FORM

    def __post_init__(self):
        if not (self.b0 > 0 and self.b1 > 0 and self.c0 > 0 and self.c1 > 0):
            raise ValueError("bandwidths and constants must be positive")


def rn_risk(b0, b1, n, d):
    """Risk of replacing true errors by residuals, as a function of both bandwidths.

    Vectorises over ``b0`` and ``b1``.
    """
    b0 = np.asarray(b0, dtype=float)
    b1 = np.asarray(b1, dtype=float)
    reg = b0**4 + 1.0 / (n * b0**d)
    lin = (1.0 / np.sqrt(n * b1**5) + np.sqrt(b0**d / b1**3)) ** 2
    cub = (1.0 / b1 + np.sqrt(b0**d / b1**7)) ** 2
    out = b0**4 + lin * reg**2 + cub * reg**3
    return float(out) if out.ndim == 0 else out


def amse_b1(b1, n):
    """Pointwise AMSE order of the oracle estimator: ``b1^4 + 1/(n b1)``."""
    return b1**4 + 1.0 / (n * b1)


def b0_star_branches(n: float, d: int, b1: float) -> tuple[float, float]:
    """The two candidate orders whose maximum gives the optimal ``b0``."""
    first = (1.0 / (n * n * b1**3)) ** (1.0 / (d + 4))
    second = (1.0 / (n**3 * b1**7)) ** (1.0 / (2 * d + 4))
    return first, second


def b0_star(n: float, d: int, b1: float, c0: float = 1.0) -> float:
    """Order-optimal first-step bandwidth for a given ``b1``."""
    if n < 2 or d < 1 or b1 <= 0 or c0 <= 0:
        raise ValueError("b0_star needs n >= 2, d >= 1, b1 > 0, c0 > 0")
    return c0 * max(b0_star_branches(n, d, b1))


def b1_star_rate(n: float, d: int, c1: float = 1.0) -> float:
    """Order-optimal second-step bandwidth: ``n^(-1/5)`` for d <= 2, ``n^(-3/(2d+11))`` above."""
    if n < 2 or d < 1 or c1 <= 0:
        raise ValueError("b1_star_rate needs n >= 2, d >= 1, c1 > 0")
    if d <= 2:
        return c1 * n ** (-1.0 / 5.0)
    return c1 * n ** (-3.0 / (2 * d + 11))


def b1_amise_plugin(f2_sq_integral: float, k1: KernelConstants, p_in_region: float, n: float) -> float:
    """AMISE-optimal ``b1`` given the curvature ``int f''^2`` of the error density.

    ``p_in_region`` is the probability that a covariate falls in the trim region.
    """
    if f2_sq_integral < 0:
        raise ValueError("f2_sq_integral must be nonnegative")
    if f2_sq_integral == 0:
        raise ZeroCurvature("int f''^2 = 0: the plug-in bandwidth is undefined")
    if not 0 < p_in_region <= 1:
        raise ValueError("p_in_region must lie in (0, 1]")
    variance = k1.squared_integral / p_in_region
    bias = f2_sq_integral * k1.second_moment**2
    return (variance / bias) ** 0.2 * n ** (-0.2)


def rn_argmin_numeric(n: float, d: int, b1: float, points: int = 400) -> float:
    """Minimise ``rn_risk`` over ``b0`` on a log grid, then refine once between the grid neighbours."""
    if n < 2:
        raise ValueError("n must be >= 2")
    lo = math.log(n ** (-1.0 / d) * 1e-2)
    grid = np.exp(np.linspace(lo, 0.0, points))
    i = int(np.argmin(rn_risk(grid, b1, n, d)))
    left = grid[max(i - 1, 0)]
    right = grid[min(i + 1, points - 1)]
    fine = np.exp(np.linspace(math.log(left), math.log(right), points))
    return float(fine[int(np.argmin(rn_risk(fine, b1, n, d)))])


@dataclass(frozen=True)
class A11Diagnostics:
    """The three rate quantities of the normality condition.

    ``exponents`` are the implied powers of ``n`` when the bandwidths are read
    as ``b = n^(-alpha)``; ``status`` is ``"ok"``, ``"boundary"`` (a quantity
    that should vanish or diverge stays bounded) or ``"violated"``.
    """

    n_b0_d4: float
    n_b0_4_b1: float
    n_b0_d_b1_3: float
    exponents: tuple[float, float, float]
    status: str
    note: str


_EXP_TOL = 1e-6


def check_a11(b0: float, b1: float, n: float, d: int) -> A11Diagnostics:
    q1 = n * b0 ** (d + 4)
    q2 = n * b0**4 * b1
    q3 = n * b0**d * b1**3
    if n > 1:
        a0 = -math.log(b0) / math.log(n)
        a1 = -math.log(b1) / math.log(n)
        e = (1 - (d + 4) * a0, 1 - 4 * a0 - a1, 1 - d * a0 - 3 * a1)
    else:
        e = (math.nan, math.nan, math.nan)
    notes = []
    status = "ok"
    # Requirements: e1 <= 0 (bounded), e2 < 0 (vanishing), e3 > 0 (diverging).
    if e[0] > _EXP_TOL or e[1] > _EXP_TOL or e[2] < -_EXP_TOL:
        status = "violated"
        notes.append("bandwidth rates outside the normality regime")
    elif abs(e[1]) <= _EXP_TOL or abs(e[2]) <= _EXP_TOL:
        status = "boundary"
        if abs(e[2]) <= _EXP_TOL:
            notes.append("n*b0^d*b1^3 stays bounded (the d=2 case with optimal bandwidths)")
        if abs(e[1]) <= _EXP_TOL:
            notes.append("n*b0^4*b1 stays bounded instead of vanishing")
    elif any(math.isnan(v) for v in e):
        status = "boundary"
        notes.append("rates undefined for n <= 1")
    return A11Diagnostics(q1, q2, q3, e, status, "; ".join(notes))
