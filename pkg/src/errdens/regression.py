"""Nadaraya-Watson regression, its leave-one-out variant and residual extraction.

All sums are direct O(n^2) kernel sums evaluated in a fixed order
(``j = 0..n-1`` for every query), so results do not depend on how the
queries are batched.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import AllTrimmed, EmptyNeighborhood
from .kernels import _k0_factor

__all__ = [
    "Sample",
    "TrimRegion",
    "ResidualSet",
    "default_trim",
    "kernel_weights",
    "g_hat",
    "nw_estimate",
    "nw_loo",
    "loo_fit",
    "residuals",
]

# Query rows processed per block; bounds the (rows x n x d) temporary.
_BLOCK_ELEMENTS = 2_000_000


@dataclass(frozen=True)
class Sample:
    """Covariates ``x`` (n x d) and responses ``y`` (n,)."""

    x: NDArray[np.float64]
    y: NDArray[np.float64]

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        y = np.asarray(self.y, dtype=float).reshape(-1)
        if x.ndim != 2 or x.shape[1] < 1:
            raise ValueError("x must be an (n, d) matrix with d >= 1")
        if x.shape[0] != y.shape[0]:
            raise ValueError(f"x has {x.shape[0]} rows but y has {y.shape[0]} entries")
        if x.shape[0] < 1:
            raise ValueError("sample is empty")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("sample contains non-finite values")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def d(self) -> int:
        return self.x.shape[1]

    def drop(self, i: int) -> "Sample":
        keep = np.arange(self.n) != i
        return Sample(self.x[keep], self.y[keep])


@dataclass(frozen=True)
class TrimRegion:
    """Axis-aligned closed box; ``p`` is inside iff ``lower <= p <= upper`` coordinatewise."""

    lower: NDArray[np.float64]
    upper: NDArray[np.float64]

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lower and upper must be vectors of equal length")
        if not np.all(lo < hi):
            raise ValueError("trim region needs lower < upper in every coordinate")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def d(self) -> int:
        return self.lower.shape[0]

    def contains(self, points: ArrayLike) -> NDArray[np.bool_]:
        p = np.asarray(points, dtype=float)
        if p.ndim == 1 and self.d == 1:
            p = p[:, None]
        return np.all((p >= self.lower) & (p <= self.upper), axis=-1)


def default_trim(x: ArrayLike, shrink: float = 0.1) -> TrimRegion:
    """Bounding box of ``x`` shrunk by ``shrink`` times its width on each side."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    lo, hi = x.min(axis=0), x.max(axis=0)
    width = hi - lo
    return TrimRegion(lo + shrink * width, hi - shrink * width)


@dataclass(frozen=True)
class ResidualSet:
    """Leave-one-out residuals with the trimming mask.

    ``trim_mask[i]`` is true when ``x_i`` lies in the trim region *and* the
    leave-one-out fit at ``x_i`` had a nonempty neighbourhood. The two
    failure reasons are kept separately in ``outside_region`` and
    ``empty_neighborhood``. Residuals are NaN where the fit failed.
    """

    residuals: NDArray[np.float64]
    trim_mask: NDArray[np.bool_]
    b0: float
    outside_region: NDArray[np.bool_] = field(repr=False)
    empty_neighborhood: NDArray[np.bool_] = field(repr=False)
    trim: TrimRegion | None = None

    @property
    def n_trimmed_in(self) -> int:
        return int(np.count_nonzero(self.trim_mask))


def _as_points(x: ArrayLike, d: int) -> tuple[NDArray[np.float64], bool]:
    """Return ``(points (m, d), single)``."""
    p = np.asarray(x, dtype=float)
    if p.ndim == 0:
        if d != 1:
            raise ValueError(f"expected a point of dimension {d}")
        return p.reshape(1, 1), True
    if p.ndim == 1:
        if p.shape[0] == d:
            return p[None, :], True
        if d == 1:
            return p[:, None], False
        raise ValueError(f"expected a point of dimension {d}, got length {p.shape[0]}")
    if p.shape[-1] != d:
        raise ValueError(f"expected points of dimension {d}, got {p.shape[-1]}")
    return p.reshape(-1, d), False


def kernel_weights(xs: NDArray[np.float64], points: NDArray[np.float64], b: float) -> NDArray[np.float64]:
    """Matrix ``W[m, j] = K0((xs[j] - points[m]) / b)`` for (n, d) ``xs`` and (m, d) ``points``."""
    if b <= 0:
        raise ValueError("bandwidth must be positive")
    w = _k0_factor((xs[None, :, 0] - points[:, 0, None]) / b)
    for j in range(1, xs.shape[1]):
        w *= _k0_factor((xs[None, :, j] - points[:, j, None]) / b)
    return w


def _blocks(m: int, n: int, d: int):
    step = max(1, _BLOCK_ELEMENTS // max(1, n * d))
    for start in range(0, m, step):
        yield slice(start, min(m, start + step))


def _weighted_sums(sample: Sample, b: float, points: NDArray[np.float64], exclude_self: bool = False):
    """Kernel sums ``sum_j K0`` and ``sum_j y_j K0`` at every query point.

    With ``exclude_self`` the query points are the sample covariates and the
    diagonal term ``j == i`` is dropped.
    """
    m = points.shape[0]
    den = np.empty(m)
    num = np.empty(m)
    for blk in _blocks(m, sample.n, sample.d):
        w = kernel_weights(sample.x, points[blk], b)
        if exclude_self:
            rows = np.arange(blk.start, blk.stop)
            w[rows - blk.start, rows] = 0.0
        den[blk] = w.sum(axis=1)
        num[blk] = (w * sample.y).sum(axis=1)
    return num, den


def g_hat(sample: Sample, b0: float, x: ArrayLike) -> float | NDArray[np.float64]:
    """Kernel estimate of the covariate density, ``(1/(n b0^d)) sum_i K0((X_i - x)/b0)``."""
    pts, single = _as_points(x, sample.d)
    _, den = _weighted_sums(sample, b0, pts)
    out = den / (sample.n * b0**sample.d)
    return float(out[0]) if single else out


def nw_estimate(sample: Sample, b0: float, x: ArrayLike) -> float | NDArray[np.float64]:
    """Nadaraya-Watson estimate of the regression function at ``x``.

    Raises
    ------
    EmptyNeighborhood
        If no observation lies inside the kernel support around a query point.
    """
    pts, single = _as_points(x, sample.d)
    num, den = _weighted_sums(sample, b0, pts)
    if np.any(den == 0.0):
        bad = pts[np.flatnonzero(den == 0.0)[0]]
        raise EmptyNeighborhood(f"no observation within b0/2 of x={bad.tolist()} (b0={b0})")
    out = num / den
    return float(out[0]) if single else out


def loo_fit(sample: Sample, b0: float) -> tuple[NDArray[np.float64], NDArray[np.bool_]]:
    """Leave-one-out fits at every ``X_i``.

    Returns ``(fits, ok)``; ``fits[i]`` is NaN where ``ok[i]`` is false because
    no other observation is within reach.
    """
    num, den = _weighted_sums(sample, b0, sample.x, exclude_self=True)
    ok = den > 0.0
    fits = np.full(sample.n, np.nan)
    fits[ok] = num[ok] / den[ok]
    return fits, ok


def nw_loo(sample: Sample, b0: float, i: int) -> float:
    """Leave-one-out Nadaraya-Watson fit at ``X_i`` (observation ``i`` excluded)."""
    if sample.n < 2:
        raise ValueError("leave-one-out needs n >= 2")
    if not 0 <= i < sample.n:
        raise IndexError(f"index {i} out of range for n={sample.n}")
    w = kernel_weights(sample.x, sample.x[i : i + 1], b0)[0]
    w[i] = 0.0
    den = w.sum()
    if den == 0.0:
        raise EmptyNeighborhood(f"observation {i} has no neighbour within b0/2 (b0={b0})")
    return float((w * sample.y).sum() / den)


def residuals(sample: Sample, b0: float, trim: TrimRegion | None = None) -> ResidualSet:
    """Leave-one-out residuals ``Y_i - m_hat_i`` with trimming.

    ``trim`` defaults to :func:`default_trim` of the covariates.
    """
    if b0 <= 0:
        raise ValueError("b0 must be positive")
    if sample.n < 2:
        raise ValueError("residual extraction needs n >= 2")
    if trim is None:
        trim = default_trim(sample.x)
    if trim.d != sample.d:
        raise ValueError(f"trim region has dimension {trim.d}, sample has {sample.d}")
    fits, ok = loo_fit(sample, b0)
    inside = trim.contains(sample.x)
    mask = inside & ok
    if not mask.any():
        raise AllTrimmed(
            f"no usable residual: {int(inside.sum())} points in region, {int(ok.sum())} with neighbours"
        )
    return ResidualSet(
        residuals=sample.y - fits,
        trim_mask=mask,
        b0=float(b0),
        outside_region=~inside,
        empty_neighborhood=~ok,
        trim=trim,
    )
