"""Synthetic regression models and Monte Carlo experiments.

Every replication draws from its own generator, seeded by
``SeedSequence(seed, spawn_key=(n, rep))``. Results therefore depend only on
``(seed, n, rep)`` and not on execution order or worker count; tables are
assembled into a pre-indexed layout sorted by ``(n, rep)``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Any, Callable

import numpy as np
import pandas as pd
from numpy.typing import NDArray
from scipy import integrate, stats

from .bandwidth import (
    BandwidthPlan,
    BandwidthSource,
    b0_star,
    b1_amise_plugin,
    b1_star_rate,
    check_a11,
    rn_argmin_numeric,
)
from .errdensity import ise, naive_conditional_density, oracle_density, two_step_density
from .errors import AllTrimmed, EmptyNeighborhood, ErrdensError
from .kernels import K1, compute_constants
from .regression import Sample, TrimRegion, default_trim, g_hat, nw_estimate, residuals

__all__ = [
    "ErrorLaw",
    "ModelSpec",
    "BandwidthRule",
    "ExperimentReport",
    "simulate",
    "replication_rng",
    "rate_experiment",
    "gap_experiment",
    "normality_experiment",
    "supnorm_diagnostic",
    "contrast_experiment",
    "default_workers",
]

M_FAMILIES = ("constant", "linear", "sine_product")
G_FAMILIES = ("uniform_box", "truncated_normal")
F_FAMILIES = ("std_normal", "normal_mixture", "student_t8")

# Covariate law of the truncated-normal family, per coordinate, on [0, 1].
_TN_MEAN, _TN_SD = 0.5, 0.25
# Mixture components: 0.5 N(-1, 0.5^2) + 0.5 N(1, 0.5^2).
_MIX_MU, _MIX_SD = 1.0, 0.5
_T8_SCALE = math.sqrt(6.0 / 8.0)


def _normal_d2(e, mu, sd):
    z = (e - mu) / sd
    return (z * z - 1.0) * stats.norm.pdf(z) / sd**3


def _t8_d2(e):
    nu = 8.0
    x = np.asarray(e, dtype=float) / _T8_SCALE
    c = math.exp(math.lgamma((nu + 1) / 2) - math.lgamma(nu / 2)) / math.sqrt(nu * math.pi)
    u = 1.0 + x * x / nu
    d2 = -c * (nu + 1) / nu * u ** (-(nu + 1) / 2 - 2) * (1.0 - (nu + 2) * x * x / nu)
    return d2 / _T8_SCALE**3


@dataclass(frozen=True)
class ErrorLaw:
    """Centred error distribution ``scale * e`` with ``e`` from ``family``."""

    family: str
    scale: float = 1.0

    def __post_init__(self):
        if self.family not in F_FAMILIES:
            raise ValueError(f"unknown error family {self.family!r}; choose from {F_FAMILIES}")
        if self.scale < 0:
            raise ValueError("noise scale must be nonnegative")

    @property
    def sd(self) -> float:
        unit = math.sqrt(_MIX_MU**2 + _MIX_SD**2) if self.family == "normal_mixture" else 1.0
        return self.scale * unit

    def sample(self, rng: np.random.Generator, n: int) -> NDArray[np.float64]:
        if self.family == "std_normal":
            e = rng.standard_normal(n)
        elif self.family == "normal_mixture":
            sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
            e = sign * _MIX_MU + _MIX_SD * rng.standard_normal(n)
        else:
            e = _T8_SCALE * rng.standard_t(8, size=n)
        return self.scale * e

    def _unit_pdf(self, e):
        if self.family == "std_normal":
            return stats.norm.pdf(e)
        if self.family == "normal_mixture":
            return 0.5 * (stats.norm.pdf(e, -_MIX_MU, _MIX_SD) + stats.norm.pdf(e, _MIX_MU, _MIX_SD))
        return stats.t.pdf(e, 8, scale=_T8_SCALE)

    def _unit_d2(self, e):
        if self.family == "std_normal":
            return _normal_d2(e, 0.0, 1.0)
        if self.family == "normal_mixture":
            return 0.5 * (_normal_d2(e, -_MIX_MU, _MIX_SD) + _normal_d2(e, _MIX_MU, _MIX_SD))
        return _t8_d2(e)

    def pdf(self, e):
        e = np.asarray(e, dtype=float)
        if self.scale == 0:
            return np.full(e.shape, np.nan)
        return self._unit_pdf(e / self.scale) / self.scale

    def d2pdf(self, e):
        """Second derivative of the density."""
        e = np.asarray(e, dtype=float)
        if self.scale == 0:
            return np.full(e.shape, np.nan)
        return self._unit_d2(e / self.scale) / self.scale**3

    @cached_property
    def f2_sq_integral(self) -> float:
        """``int f''(e)^2 de``."""
        if self.scale == 0:
            return math.nan
        if self.family == "std_normal":
            unit = 3.0 / (8.0 * math.sqrt(math.pi))
        else:
            unit = integrate.quad(lambda e: float(self._unit_d2(e)) ** 2, -np.inf, np.inf, limit=200)[0]
        return unit / self.scale**5


@dataclass(frozen=True)
class ModelSpec:
    """Regression model ``Y = m(X) + noise_scale * e`` with covariates on ``[0, 1]^d``."""

    d: int = 1
    m_family: str = "sine_product"
    g_family: str = "uniform_box"
    f_family: str = "std_normal"
    noise_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.m_family not in M_FAMILIES:
            raise ValueError(f"unknown regression family {self.m_family!r}; choose from {M_FAMILIES}")
        if self.g_family not in G_FAMILIES:
            raise ValueError(f"unknown covariate family {self.g_family!r}; choose from {G_FAMILIES}")
        ErrorLaw(self.f_family, self.noise_scale)

    @property
    def errors(self) -> ErrorLaw:
        return ErrorLaw(self.f_family, self.noise_scale)

    def m(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        x = np.asarray(x, dtype=float)
        if self.m_family == "constant":
            return np.ones(x.shape[0])
        if self.m_family == "linear":
            return x.sum(axis=1)
        return np.prod(np.sin(2.0 * np.pi * x), axis=1)

    def g(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        """True covariate density."""
        x = np.asarray(x, dtype=float)
        inside = np.all((x >= 0.0) & (x <= 1.0), axis=1)
        if self.g_family == "uniform_box":
            return inside.astype(float)
        a, b = (0.0 - _TN_MEAN) / _TN_SD, (1.0 - _TN_MEAN) / _TN_SD
        return np.prod(stats.truncnorm.pdf(x, a, b, loc=_TN_MEAN, scale=_TN_SD), axis=1) * inside

    def draw_x(self, rng: np.random.Generator, n: int) -> NDArray[np.float64]:
        if self.g_family == "uniform_box":
            return rng.random((n, self.d))
        a, b = (0.0 - _TN_MEAN) / _TN_SD, (1.0 - _TN_MEAN) / _TN_SD
        return stats.truncnorm.rvs(a, b, loc=_TN_MEAN, scale=_TN_SD, size=(n, self.d), random_state=rng)


def replication_rng(seed: int, n: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(int(n), int(rep))))


def simulate(spec: ModelSpec, n: int, rng: np.random.Generator | None = None):
    """Draw ``(Sample, true_errors)``; ``rng`` defaults to one seeded by ``spec.seed``."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    x = spec.draw_x(rng, n)
    eps = spec.errors.sample(rng, n)
    return Sample(x, spec.m(x) + eps), eps


@dataclass(frozen=True)
class BandwidthRule:
    """How to pick ``(b0, b1)`` for a sample of size ``n``.

    ``closed_form``: ``b1 = c1 * rate``, ``b0 = b0_star(b1)``.
    ``numeric_min``: as closed form but ``b0`` minimises the risk bound numerically.
    ``amise_plugin``: ``b1`` from the AMISE plug-in with known curvature, ``b0 = b0_star(b1)``.
    ``manual``: fixed ``b0``, ``b1``.
    """

    kind: str = "closed_form"
    c0: float = 1.0
    c1: float = 1.0
    b0: float | None = None
    b1: float | None = None

    def __post_init__(self):
        if self.kind not in {s.value for s in BandwidthSource}:
            raise ValueError(f"unknown bandwidth rule {self.kind!r}")
        if self.kind == "manual" and (self.b0 is None or self.b1 is None):
            raise ValueError("manual bandwidths need both b0 and b1")

    def plan(self, n: int, d: int, f2_sq_integral: float | None = None,
             p_in_region: float | None = None) -> BandwidthPlan:
        src = BandwidthSource(self.kind)
        if src is BandwidthSource.MANUAL:
            return BandwidthPlan(self.b0, self.b1, source=src)
        if src is BandwidthSource.AMISE_PLUGIN:
            if f2_sq_integral is None or p_in_region is None:
                raise ValueError("amise_plugin needs the error curvature and the trim probability")
            b1 = self.c1 * b1_amise_plugin(f2_sq_integral, compute_constants(K1), p_in_region, n)
        else:
            b1 = b1_star_rate(n, d, self.c1)
        if src is BandwidthSource.NUMERIC_MIN:
            b0 = self.c0 * rn_argmin_numeric(n, d, b1)
        else:
            b0 = b0_star(n, d, b1, self.c0)
        return BandwidthPlan(b0, b1, self.c0, self.c1, src)


@dataclass
class ExperimentReport:
    kind: str
    per_replication: pd.DataFrame
    slopes: dict[str, tuple[float, float]] = field(default_factory=dict)
    ks_distance: float | None = None
    summary: dict[str, Any] = field(default_factory=dict)
    config_echo: dict[str, Any] = field(default_factory=dict)


def default_workers() -> int:
    """Worker cap from ``ERRDENS_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get("ERRDENS_THREADS", "0").strip() or "0"
    k = int(raw)
    return k if k > 0 else (os.cpu_count() or 1)


def _run_tasks(fn: Callable, tasks: list, workers: int | None) -> list:
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(tasks) < 2:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def default_error_grid(spec: ModelSpec, count: int = 601) -> NDArray[np.float64]:
    half = 6.0 * spec.errors.sd if spec.noise_scale > 0 else 1.0
    return np.linspace(-half, half, count)


_ROW_NAN = dict(b0=np.nan, b1=np.nan, n_trimmed_in=0, p_hat=np.nan, ise_feasible=np.nan,
                ise_oracle=np.nan, sup_gap=np.nan, sup_err_feasible=np.nan, sup_err_oracle=np.nan,
                fhat_eps0=np.nan, foracle_eps0=np.nan)


def _density_replication(task) -> dict[str, Any]:
    spec, n, rep, rule, trim, grid, eps0, force_oracle_residuals = task
    rng = replication_rng(spec.seed, n, rep)
    sample, eps = simulate(spec, n, rng)
    region = trim if trim is not None else default_trim(sample.x)
    law = spec.errors
    p_hat = float(np.mean(region.contains(sample.x)))
    row = dict(n=n, rep=rep, dropped=0, reason="", **_ROW_NAN)
    try:
        f2 = law.f2_sq_integral if spec.noise_scale > 0 else None
        plan = rule.plan(n, spec.d, f2_sq_integral=f2, p_in_region=max(p_hat, 1.0 / n))
        res = residuals(sample, plan.b0, region)
    except ErrdensError as exc:
        row.update(dropped=1, reason=exc.code)
        return row
    if force_oracle_residuals:
        # Test hook: feed the true errors through the feasible path.
        res = type(res)(eps.copy(), res.trim_mask, res.b0, res.outside_region, res.empty_neighborhood, res.trim)
    fhat = two_step_density(res, plan.b1, grid)
    ftil = oracle_density(eps, res.trim_mask, plan.b1, grid)
    f_true = law.pdf(grid)
    at0 = np.array([eps0])
    row.update(
        b0=plan.b0,
        b1=plan.b1,
        n_trimmed_in=res.n_trimmed_in,
        p_hat=res.n_trimmed_in / n,
        ise_feasible=ise(fhat, law.pdf),
        ise_oracle=ise(ftil, law.pdf),
        sup_gap=float(np.max(np.abs(fhat.values - ftil.values))),
        sup_err_feasible=float(np.max(np.abs(fhat.values - f_true))),
        sup_err_oracle=float(np.max(np.abs(ftil.values - f_true))),
        fhat_eps0=float(two_step_density(res, plan.b1, at0).values[0]),
        foracle_eps0=float(oracle_density(eps, res.trim_mask, plan.b1, at0).values[0]),
    )
    return row


def _loglog_slope(n_values, y_values) -> tuple[float, float]:
    fit = stats.linregress(np.log(n_values), np.log(y_values))
    return float(fit.slope), float(fit.stderr)


def _standardize(table: pd.DataFrame, law: ErrorLaw, eps0: float) -> pd.DataFrame:
    """Add the standardised statistic at ``eps0``, centred at the per-n Monte Carlo mean."""
    k1 = compute_constants(K1)
    f0 = float(law.pdf(eps0))
    f2_0 = float(law.d2pdf(eps0))
    center = table.groupby("n")["fhat_eps0"].transform("mean")
    sigma = np.sqrt(f0 * k1.squared_integral / table["p_hat"])
    scaled = np.sqrt(table["n"] * table["b1"])
    theory_center = f0 + 0.5 * table["b1"] ** 2 * f2_0 * k1.second_moment
    out = table.copy()
    out["stat"] = scaled * (table["fhat_eps0"] - center) / sigma
    out["stat_theory"] = scaled * (table["fhat_eps0"] - theory_center) / sigma
    return out


def _ks(values) -> float:
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    return float(stats.kstest(v, "norm").statistic) if v.size else math.nan


def _echo(spec: ModelSpec, rule: BandwidthRule, **extra) -> dict[str, Any]:
    out = {"model": asdict(spec), "bandwidths": asdict(rule)}
    for key, val in extra.items():
        if isinstance(val, TrimRegion):
            val = {"lower": val.lower.tolist(), "upper": val.upper.tolist()}
        elif isinstance(val, np.ndarray):
            val = val.tolist()
        out[key] = val
    return out


def _density_runs(kind, spec, n_grid, reps, rule, eps0, trim, grid, workers, force_oracle_residuals=False):
    n_grid = [int(n) for n in n_grid]
    grid = default_error_grid(spec) if grid is None else np.asarray(grid, dtype=float)
    tasks = [(spec, n, r, rule, trim, grid, eps0, force_oracle_residuals) for n in n_grid for r in range(reps)]
    rows = _run_tasks(_density_replication, tasks, workers)
    table = pd.DataFrame(rows).sort_values(["n", "rep"], kind="stable").reset_index(drop=True)
    if spec.noise_scale > 0:
        table = _standardize(table, spec.errors, eps0)
    echo = _echo(spec, rule, kind=kind, n_grid=n_grid, reps=reps, eps0=eps0, trim=trim or "auto",
                 grid={"min": float(grid[0]), "max": float(grid[-1]), "count": int(grid.size)})
    return table, echo


def _per_n_summary(table: pd.DataFrame) -> pd.DataFrame:
    kept = table[table["dropped"] == 0]
    agg = kept.groupby("n").agg(
        median_rise_feasible=("ise_feasible", lambda s: float(np.median(np.sqrt(s)))),
        median_rise_oracle=("ise_oracle", lambda s: float(np.median(np.sqrt(s)))),
        median_sup_gap=("sup_gap", "median"),
        median_sup_err_oracle=("sup_err_oracle", "median"),
        b0=("b0", "median"),
        b1=("b1", "median"),
    )
    agg["dropped"] = table.groupby("n")["dropped"].sum()
    return agg


def rate_experiment(spec: ModelSpec, n_grid, reps: int, bw: BandwidthRule | None = None, *,
                    eps0: float = 0.0, trim: TrimRegion | None = None, grid=None,
                    workers: int | None = None) -> ExperimentReport:
    """Convergence rate of the two-step estimator in root-ISE.

    Slopes are least-squares fits of ``log(median sqrt(ISE))`` on ``log(n)``.
    Replications that fail (e.g. everything trimmed) are dropped and counted.
    """
    if len(n_grid) < 4 or reps < 50:
        raise ValueError("rate experiments need at least 4 sample sizes and 50 replications")
    if spec.noise_scale <= 0:
        raise ValueError("rate experiments need a positive noise scale")
    bw = bw or BandwidthRule()
    table, echo = _density_runs("rate", spec, n_grid, reps, bw, eps0, trim, grid, workers)
    per_n = _per_n_summary(table)
    ns = per_n.index.to_numpy(dtype=float)
    slopes = {
        "feasible_rise": _loglog_slope(ns, per_n["median_rise_feasible"]),
        "oracle_rise": _loglog_slope(ns, per_n["median_rise_oracle"]),
        "sup_gap": _loglog_slope(ns, per_n["median_sup_gap"]),
    }
    summary = {
        "per_n": per_n.reset_index().to_dict(orient="list"),
        "dropped": int(table["dropped"].sum()),
        "oracle_not_slower": slopes["oracle_rise"][0] <= slopes["feasible_rise"][0] + 0.1,
    }
    return ExperimentReport("rate", table, slopes, None, summary, echo)


def gap_experiment(spec: ModelSpec, n_grid, reps: int, bw: BandwidthRule | None = None, *,
                   eps0: float = 0.0, trim: TrimRegion | None = None, grid=None,
                   workers: int | None = None, force_oracle_residuals: bool = False) -> ExperimentReport:
    """Sup-distance between the feasible and oracle estimators across sample sizes.

    ``summary["gap_decreasing"]`` says whether the median gap falls strictly
    with ``n``; ``summary["gap_negligible"]`` compares it, at the largest ``n``,
    with the median sup-error of the oracle estimator itself.
    """
    if len(n_grid) < 2 or reps < 1:
        raise ValueError("gap experiments need at least 2 sample sizes")
    bw = bw or BandwidthRule()
    table, echo = _density_runs("gap", spec, n_grid, reps, bw, eps0, trim, grid, workers,
                                force_oracle_residuals)
    per_n = _per_n_summary(table)
    gaps = per_n["median_sup_gap"].to_numpy()
    slopes = {}
    if np.all(gaps > 0):
        slopes["sup_gap"] = _loglog_slope(per_n.index.to_numpy(dtype=float), gaps)
    last = per_n.iloc[-1]
    summary = {
        "per_n": per_n.reset_index().to_dict(orient="list"),
        "dropped": int(table["dropped"].sum()),
        "gap_decreasing": bool(np.all(np.diff(gaps) < 0)),
        "gap_negligible": bool(last["median_sup_gap"] < last["median_sup_err_oracle"]),
    }
    return ExperimentReport("gap", table, slopes, None, summary, echo)


def normality_experiment(spec: ModelSpec, n: int, reps: int, eps0: float = 0.0,
                         bw: BandwidthRule | None = None, *, trim: TrimRegion | None = None,
                         grid=None, workers: int | None = None) -> ExperimentReport:
    """Distribution of ``sqrt(n b1) (f_hat(eps0) - center) / sigma`` across replications.

    ``center`` is the Monte Carlo mean of ``f_hat(eps0)``; ``sigma^2`` is
    ``f(eps0) int K1^2 / P_hat`` with ``P_hat`` the trimmed-in fraction. The
    report also carries the KS distance under the bias-corrected theoretical
    centring and the ratio of the empirical variance to ``sigma^2``.
    """
    if reps < 300:
        raise ValueError("normality experiments need at least 300 replications")
    if spec.noise_scale <= 0:
        raise ValueError("normality experiments need a positive noise scale")
    bw = bw or BandwidthRule()
    table, echo = _density_runs("normality", spec, [n], reps, bw, eps0, trim, grid, workers)
    kept = table[table["dropped"] == 0]
    k1 = compute_constants(K1)
    f0 = float(spec.errors.pdf(eps0))
    scaled = np.sqrt(kept["n"] * kept["b1"]) * (kept["fhat_eps0"] - kept["fhat_eps0"].mean())
    sigma2 = f0 * k1.squared_integral / kept["p_hat"].mean()
    a11 = check_a11(float(kept["b0"].median()), float(kept["b1"].median()), n, spec.d)
    summary = {
        "ks_distance_theory_center": _ks(kept["stat_theory"]),
        "variance_empirical": float(np.var(scaled, ddof=1)),
        "variance_theory": float(sigma2),
        "variance_ratio": float(np.var(scaled, ddof=1) / sigma2),
        "p_hat_mean": float(kept["p_hat"].mean()),
        "dropped": int(table["dropped"].sum()),
        "a11": asdict(a11),
    }
    return ExperimentReport("normality", table, {}, _ks(kept["stat"]), summary, echo)


def _region_grid(region: TrimRegion, total: int = 2001) -> NDArray[np.float64]:
    per_axis = max(3, int(round(total ** (1.0 / region.d))))
    axes = [np.linspace(lo, hi, per_axis) for lo, hi in zip(region.lower, region.upper)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _supnorm_replication(task) -> dict[str, Any]:
    spec, n, rep, trim = task
    sample, _ = simulate(spec, n, replication_rng(spec.seed, n, rep))
    region = trim if trim is not None else TrimRegion(np.full(spec.d, 0.1), np.full(spec.d, 0.9))
    pts = _region_grid(region)
    b0 = n ** (-1.0 / (spec.d + 4))
    row = dict(n=n, rep=rep, b0=b0, dropped=0, reason="", sup_err_g=np.nan, sup_err_m=np.nan)
    row["sup_err_g"] = float(np.max(np.abs(g_hat(sample, b0, pts) - spec.g(pts))))
    try:
        row["sup_err_m"] = float(np.max(np.abs(nw_estimate(sample, b0, pts) - spec.m(pts))))
    except EmptyNeighborhood as exc:
        row.update(dropped=1, reason=exc.code)
    return row


def supnorm_diagnostic(spec: ModelSpec, n_grid, reps: int, *, trim: TrimRegion | None = None,
                       workers: int | None = None) -> ExperimentReport:
    """Sup-norm errors of the covariate density and regression estimates on the trim region.

    Uses ``b0 = n^(-1/(d+4))`` and, unless ``trim`` is given, the fixed region
    ``[0.1, 0.9]^d`` of the unit covariate box.
    """
    n_grid = [int(n) for n in n_grid]
    tasks = [(spec, n, r, trim) for n in n_grid for r in range(reps)]
    rows = _run_tasks(_supnorm_replication, tasks, workers)
    table = pd.DataFrame(rows).sort_values(["n", "rep"], kind="stable").reset_index(drop=True)
    kept = table[table["dropped"] == 0]
    per_n = kept.groupby("n").agg(median_sup_err_g=("sup_err_g", "median"),
                                  median_sup_err_m=("sup_err_m", "median"))
    ns = per_n.index.to_numpy(dtype=float)
    slopes = {}
    for col in per_n.columns:
        if len(ns) >= 2 and np.all(per_n[col] > 0):
            slopes[col.replace("median_", "")] = _loglog_slope(ns, per_n[col])
    summary = {
        "per_n": per_n.reset_index().to_dict(orient="list"),
        "dropped": int(table["dropped"].sum()),
        "g_decreasing": bool(np.all(np.diff(per_n["median_sup_err_g"]) < 0)),
        "m_decreasing": bool(np.all(np.diff(per_n["median_sup_err_m"]) < 0)),
    }
    echo = _echo(spec, BandwidthRule(), kind="supnorm", n_grid=n_grid, reps=reps,
                 b0_rule="n^(-1/(d+4))", trim=trim or "[0.1, 0.9]^d")
    return ExperimentReport("supnorm", table, slopes, None, summary, echo)


def _contrast_replication(task) -> dict[str, Any]:
    spec, n, rep, rule, x0, eps0, h = task
    sample, _ = simulate(spec, n, replication_rng(spec.seed, n, rep))
    region = default_trim(sample.x)
    law = spec.errors
    at0 = np.array([eps0])
    row = dict(n=n, rep=rep, dropped=0, reason="", naive=np.nan, two_step=np.nan, b0=np.nan, b1=np.nan, h=h)
    try:
        naive = naive_conditional_density(sample, h, h, h, x0, at0).values[0]
        p_hat = float(np.mean(region.contains(sample.x)))
        plan = rule.plan(n, spec.d, f2_sq_integral=law.f2_sq_integral, p_in_region=max(p_hat, 1.0 / n))
        two = two_step_density(residuals(sample, plan.b0, region), plan.b1, at0).values[0]
    except ErrdensError as exc:
        row.update(dropped=1, reason=exc.code)
        return row
    row.update(naive=float(naive), two_step=float(two), b0=plan.b0, b1=plan.b1)
    return row


def contrast_experiment(spec: ModelSpec, n: int, reps: int, x0=None, eps0: float = 0.0,
                        bw: BandwidthRule | None = None, *, workers: int | None = None) -> ExperimentReport:
    """Pointwise RMSE at ``eps0`` of the naive conditional estimator versus the two-step one.

    The naive estimator evaluates at covariate ``x0`` (default: centre of the
    unit box) with ``b0 = h0 = h1 = n^(-1/(d+5))``.
    """
    bw = bw or BandwidthRule()
    x0 = np.full(spec.d, 0.5) if x0 is None else np.atleast_1d(np.asarray(x0, dtype=float))
    h = n ** (-1.0 / (spec.d + 5))
    tasks = [(spec, n, r, bw, x0, eps0, h) for r in range(reps)]
    table = pd.DataFrame(_run_tasks(_contrast_replication, tasks, workers))
    kept = table[table["dropped"] == 0]
    f0 = float(spec.errors.pdf(eps0))
    rmse_naive = float(np.sqrt(np.mean((kept["naive"] - f0) ** 2)))
    rmse_two = float(np.sqrt(np.mean((kept["two_step"] - f0) ** 2)))
    summary = {"rmse_naive": rmse_naive, "rmse_two_step": rmse_two, "ratio": rmse_naive / rmse_two,
               "f_true_eps0": f0, "dropped": int(table["dropped"].sum())}
    echo = _echo(spec, bw, kind="contrast", n=n, reps=reps, x0=x0, eps0=eps0)
    return ExperimentReport("contrast", table, {}, None, summary, echo)
