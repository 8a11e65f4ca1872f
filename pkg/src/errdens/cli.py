"""Command line entry point: ``errdens <mode> --config <path> [--key value ...]``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np
import pandas as pd

from . import montecarlo as mc
from .bandwidth import BandwidthPlan, BandwidthSource, b0_star, b1_amise_plugin, check_a11
from .errdensity import two_step_density
from .errors import ConfigError, ErrdensError
from .io import MODES, RunConfig, build_config, dump_json, load_sample, read_config_file, write_table
from .kernels import K1, compute_constants
from .regression import ResidualSet, Sample, TrimRegion, default_trim, residuals

log = logging.getLogger("errdens")

_DEFAULT_REPS = {"rate": 200, "gap": 200, "normality": 500, "supnorm": 50, "contrast": 300}


def _trim_for(cfg: RunConfig) -> TrimRegion | None:
    if cfg.trim == "box":
        return TrimRegion(cfg.trim_lower, cfg.trim_upper)
    return None


def _trim_dict(t: TrimRegion) -> dict:
    return {"lower": t.lower.tolist(), "upper": t.upper.tolist()}


def _rule(cfg: RunConfig) -> mc.BandwidthRule:
    kind = "closed_form" if cfg.bandwidths == "auto" else cfg.bandwidths
    return mc.BandwidthRule(kind, cfg.c0, cfg.c1, cfg.b0, cfg.b1)


def _reference_curvature(res: ResidualSet) -> float:
    """``int f''^2`` of a normal density with the residuals' robust scale."""
    r = res.residuals[res.trim_mask]
    q75, q25 = np.percentile(r, [75, 25])
    sd = float(np.std(r, ddof=1)) if r.size > 1 else 0.0
    scale = min(sd, (q75 - q25) / 1.349) if q75 > q25 else sd
    if not scale > 0:
        return 0.0
    return 3.0 / (8.0 * math.sqrt(math.pi) * scale**5)


def _estimate_bandwidths(cfg: RunConfig, sample: Sample, trim: TrimRegion) -> tuple[BandwidthPlan, ResidualSet]:
    rule = _rule(cfg)
    if rule.kind != "amise_plugin":
        plan = rule.plan(sample.n, sample.d)
        return plan, residuals(sample, plan.b0, trim)
    # Normal-reference plug-in from pilot residuals obtained with the closed-form rule.
    pilot = mc.BandwidthRule("closed_form", cfg.c0, cfg.c1).plan(sample.n, sample.d)
    res = residuals(sample, pilot.b0, trim)
    b1 = cfg.c1 * b1_amise_plugin(_reference_curvature(res), compute_constants(K1),
                                  res.n_trimmed_in / sample.n, sample.n)
    plan = BandwidthPlan(b0_star(sample.n, sample.d, b1, cfg.c0), b1, cfg.c0, cfg.c1,
                         BandwidthSource.AMISE_PLUGIN)
    return plan, residuals(sample, plan.b0, trim)


def _summary_path(out: Path, suffix: str) -> Path:
    return out.with_name(out.stem + suffix)


def run_estimate(cfg: RunConfig) -> dict:
    sample = load_sample(cfg.input_path)
    trim = _trim_for(cfg) or default_trim(sample.x)
    plan, res = _estimate_bandwidths(cfg, sample, trim)
    used = res.residuals[res.trim_mask]
    lo = cfg.grid_min if cfg.grid_min is not None else float(used.min() - plan.b1)
    hi = cfg.grid_max if cfg.grid_max is not None else float(used.max() + plan.b1)
    count = cfg.grid_count or 512
    est = two_step_density(res, plan.b1, np.linspace(lo, hi, count))
    resolved = asdict(cfg)
    resolved.update(b0=plan.b0, b1=plan.b1, bandwidth_source=plan.source.value, grid_min=lo, grid_max=hi,
                    grid_count=count, trim="box", trim_lower=trim.lower.tolist(), trim_upper=trim.upper.tolist())
    out = Path(cfg.output_path)
    write_table(pd.DataFrame({"epsilon": est.grid, "f_hat": est.values}), out, resolved)
    meta = {
        "config": resolved,
        "n": sample.n,
        "d": sample.d,
        "b0": plan.b0,
        "b1": plan.b1,
        "bandwidth_source": plan.source.value,
        "n_trimmed_in": res.n_trimmed_in,
        "n_outside_region": int(res.outside_region.sum()),
        "n_empty_neighborhood": int(res.empty_neighborhood.sum()),
        "trim": _trim_dict(trim),
        "a11": check_a11(plan.b0, plan.b1, sample.n, sample.d),
    }
    dump_json(meta, _summary_path(out, ".meta.json"))
    return meta


def run_experiment(cfg: RunConfig) -> mc.ExperimentReport:
    spec = mc.ModelSpec(cfg.d, cfg.m_family, cfg.g_family, cfg.f_family, cfg.noise_scale, cfg.seed)
    reps = cfg.reps if cfg.reps is not None else _DEFAULT_REPS[cfg.mode]
    rule = _rule(cfg)
    trim = _trim_for(cfg)
    grid = None
    if cfg.grid_min is not None or cfg.grid_max is not None or cfg.grid_count is not None:
        base = mc.default_error_grid(spec)
        grid = np.linspace(cfg.grid_min if cfg.grid_min is not None else base[0],
                           cfg.grid_max if cfg.grid_max is not None else base[-1],
                           cfg.grid_count or base.size)
    if cfg.mode == "rate":
        report = mc.rate_experiment(spec, cfg.n_grid, reps, rule, eps0=cfg.eps0, trim=trim, grid=grid)
    elif cfg.mode == "gap":
        report = mc.gap_experiment(spec, cfg.n_grid, reps, rule, eps0=cfg.eps0, trim=trim, grid=grid)
    elif cfg.mode == "normality":
        report = mc.normality_experiment(spec, cfg.n, reps, cfg.eps0, rule, trim=trim, grid=grid)
    elif cfg.mode == "supnorm":
        report = mc.supnorm_diagnostic(spec, cfg.n_grid, reps, trim=trim)
    else:
        report = mc.contrast_experiment(spec, cfg.n, reps, cfg.x0, cfg.eps0, rule)
    resolved = asdict(cfg)
    resolved.update(reps=reps, resolved_bandwidth_rule=asdict(rule), experiment=report.config_echo)
    out = Path(cfg.output_path)
    write_table(report.per_replication, out, resolved)
    dump_json(
        {"config": resolved, "kind": report.kind, "slopes": report.slopes, "ks_distance": report.ks_distance,
         "summary": report.summary},
        _summary_path(out, ".summary.json"),
    )
    return report


def run(cfg: RunConfig):
    cfg.validate()
    if cfg.mode == "estimate":
        return run_estimate(cfg)
    return run_experiment(cfg)


def _overrides(extra: list[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise ConfigError(f"missing value for --{key}")
            val = extra[i + 1]
            i += 2
        out[key.replace("-", "_")] = val
    return out


def _fail(code: str, message: str) -> int:
    print(f"errdens: error code={code} message={json.dumps(' '.join(message.split()))}", file=sys.stderr)
    return 2


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="errdens",
        description="Kernel estimation of the regression error density from estimated residuals.",
        epilog="Any configuration key may be given as --key value; it overrides the config file.",
    )
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", help="flat key=value configuration file")
    parser.add_argument("-v", "--verbose", action="store_true")
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        file_values = read_config_file(args.config) if args.config else {}
        cfg = build_config(args.mode, file_values, _overrides(extra))
        result = run(cfg)
    except ErrdensError as exc:
        return _fail(exc.code, str(exc))
    except FileNotFoundError as exc:
        return _fail("FileNotFound", str(exc))
    except ValueError as exc:
        return _fail("InvalidArgument", str(exc))
    if isinstance(result, mc.ExperimentReport):
        log.info("%s: slopes=%s ks=%s", result.kind, result.slopes, result.ks_distance)
    return 0


if __name__ == "__main__":
    sys.exit(main())
