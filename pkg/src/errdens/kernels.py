"""Compactly supported kernels used by the two-step estimator.

Two families are provided:

* ``epanechnikov01``: the product kernel ``K0(z) = prod_j k0(z_j)`` with
  ``k0(u) = 1.5 * (1 - 4u^2)`` on ``[-1/2, 1/2]``. Used for the covariates.
* ``quartic_smooth``: ``K1(v) = (315/256) * (1 - v^2)^4`` on ``[-1, 1]``.
  Used for the errors. It is three times continuously differentiable on the
  whole real line because its first three derivatives vanish at ``v = +-1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.integrate import simpson

__all__ = [
    "KernelSpec",
    "KernelConstants",
    "K0",
    "K1",
    "eval_k0",
    "eval_k1",
    "compute_constants",
    "quadrature_nodes",
]

Family = Literal["epanechnikov01", "quartic_smooth"]

_K1_NORM = 315.0 / 256.0
_SIMPSON_PANELS = 2048


@dataclass(frozen=True)
class KernelSpec:
    family: Family
    dimension: int = 1

    def __post_init__(self):
        if self.family not in ("epanechnikov01", "quartic_smooth"):
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.dimension < 1:
            raise ValueError("dimension must be a positive integer")
        if self.family == "quartic_smooth" and self.dimension != 1:
            raise ValueError("quartic_smooth is univariate")

    @property
    def support_halfwidth(self) -> float:
        return 0.5 if self.family == "epanechnikov01" else 1.0


def K0(d: int = 1) -> KernelSpec:
    """Product Epanechnikov kernel on ``[-1/2, 1/2]^d``."""
    return KernelSpec("epanechnikov01", d)


K1 = KernelSpec("quartic_smooth", 1)


@dataclass(frozen=True)
class KernelConstants:
    """Moments of a kernel, obtained by quadrature.

    For a product kernel in ``d`` dimensions ``first_moment`` and
    ``second_moment`` are per-coordinate vectors; ``squared_integral`` is the
    full ``d``-dimensional integral of ``K^2``.
    """

    integral: float
    first_moment: float | NDArray[np.float64]
    second_moment: float | NDArray[np.float64]
    squared_integral: float


def _k0_factor(u: NDArray[np.float64]) -> NDArray[np.float64]:
    return 1.5 * np.maximum(1.0 - 4.0 * u * u, 0.0)


def eval_k0(z: ArrayLike, spec: KernelSpec | None = None) -> float | NDArray[np.float64]:
    """Evaluate the product kernel ``K0``.

    ``z`` is a single point of length ``d`` or an array of shape ``(..., d)``.
    For ``d == 1`` a bare scalar or a 1-D array of points is also accepted.
    """
    if spec is None:
        spec = K0(np.size(z) if np.ndim(z) == 1 else 1)
    if spec.family != "epanechnikov01":
        raise ValueError("eval_k0 needs an epanechnikov01 spec")
    z = np.asarray(z, dtype=float)
    d = spec.dimension
    if z.ndim == 0:
        if d != 1:
            raise ValueError(f"expected a point of dimension {d}, got a scalar")
        return float(_k0_factor(z))
    if d == 1 and z.shape[-1] != 1:
        return _k0_factor(z)
    if z.shape[-1] != d:
        raise ValueError(f"expected points of dimension {d}, got {z.shape[-1]}")
    out = np.prod(_k0_factor(z), axis=-1)
    return float(out) if out.ndim == 0 else out


def eval_k1(v: ArrayLike, order: int = 0) -> float | NDArray[np.float64]:
    """``K1`` or one of its first three derivatives, exactly zero for ``|v| >= 1``."""
    if order not in (0, 1, 2, 3):
        raise ValueError(f"derivative order must be in 0..3, got {order!r}")
    v = np.asarray(v, dtype=float)
    # Every derivative up to order 3 carries a factor (1 - v^2); clamping it
    # at zero gives exact zeros on and beyond the support boundary.
    w = np.maximum(1.0 - v * v, 0.0)
    if order == 0:
        w2 = w * w
        out = _K1_NORM * (w2 * w2)
    elif order == 1:
        out = (-8.0 * _K1_NORM) * v * (w * w * w)
    elif order == 2:
        out = (-8.0 * _K1_NORM) * (w * w) * (1.0 - 7.0 * v * v)
    else:
        out = (-48.0 * _K1_NORM) * v * w * (7.0 * v * v - 3.0)
    return float(out) if out.ndim == 0 else out


def quadrature_nodes(spec: KernelSpec, panels: int = _SIMPSON_PANELS) -> NDArray[np.float64]:
    """Equispaced nodes covering the univariate support (``panels + 1`` of them)."""
    h = spec.support_halfwidth
    return np.linspace(-h, h, panels + 1)


def compute_constants(spec: KernelSpec) -> KernelConstants:
    """Composite Simpson moments of ``spec`` on its support."""
    u = quadrature_nodes(spec)
    k = _k0_factor(u) if spec.family == "epanechnikov01" else eval_k1(u)
    integral = simpson(k, x=u)
    first = simpson(u * k, x=u)
    second = simpson(u * u * k, x=u)
    squared = simpson(k * k, x=u)
    if spec.family == "quartic_smooth":
        return KernelConstants(float(integral), float(first), float(second), float(squared))
    d = spec.dimension
    # Product kernel: the moments of coordinate j integrate the other factors to ``integral``.
    others = integral ** (d - 1)
    return KernelConstants(
        integral=float(integral**d),
        first_moment=np.full(d, first * others),
        second_moment=np.full(d, second * others),
        squared_integral=float(squared**d),
    )
