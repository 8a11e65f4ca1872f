"""Sample ingestion, flat ``key=value`` configuration files and result serialisation."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from .errors import ConfigError, EmptyFile, MalformedCsv
from .regression import Sample

__all__ = [
    "RunConfig",
    "MODES",
    "load_sample",
    "write_sample",
    "read_config_file",
    "build_config",
    "to_jsonable",
    "dump_json",
    "write_table",
    "FLOAT_FORMAT",
]

MODES = ("estimate", "rate", "gap", "normality", "supnorm", "contrast")
FLOAT_FORMAT = "%.17g"


def _fmt(v: float) -> str:
    return FLOAT_FORMAT % v


def load_sample(path: str | Path) -> Sample:
    """Read a CSV with header ``x1,...,xd,y`` into a :class:`Sample`.

    Rows and columns in error messages are 1-based and count the header as row 1.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise EmptyFile(f"{path} is empty")
    header = [c.strip() for c in rows[0]]
    d = len(header) - 1
    expected = [f"x{j}" for j in range(1, d + 1)] + ["y"]
    if d < 1 or header != expected:
        raise MalformedCsv(f"header must be {','.join(expected) if d >= 1 else 'x1,...,xd,y'}, got {','.join(header)}",
                           row=1)
    if len(rows) == 1:
        raise EmptyFile(f"{path} has a header but no data rows")
    data = np.empty((len(rows) - 1, d + 1))
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != d + 1:
            raise MalformedCsv(f"expected {d + 1} fields, found {len(row)}", row=r)
        for c, cell in enumerate(row, start=1):
            try:
                val = float(cell)
            except ValueError:
                raise MalformedCsv(f"non-numeric value {cell.strip()!r}", row=r, column=c) from None
            if not math.isfinite(val):
                raise MalformedCsv(f"non-finite value {cell.strip()!r}", row=r, column=c)
            data[r - 2, c - 1] = val
    return Sample(data[:, :d], data[:, d])


def write_sample(sample: Sample, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{j}" for j in range(1, sample.d + 1)] + ["y"])
        for xi, yi in zip(sample.x, sample.y):
            w.writerow([_fmt(v) for v in xi] + [_fmt(yi)])


@dataclass
class RunConfig:
    """Fully resolved run configuration. ``None`` fields mean "choose automatically"."""

    mode: str
    input_path: str | None = None
    output_path: str = "errdens_out.csv"
    seed: int = 0
    # model
    d: int = 1
    m_family: str = "sine_product"
    g_family: str = "uniform_box"
    f_family: str = "std_normal"
    noise_scale: float = 1.0
    # experiment sizes
    n_grid: list[int] = field(default_factory=lambda: [250, 500, 1000, 2000, 4000])
    n: int = 2000
    reps: int | None = None
    eps0: float = 0.0
    x0: list[float] | None = None
    # bandwidths
    bandwidths: str = "auto"
    c0: float = 1.0
    c1: float = 1.0
    b0: float | None = None
    b1: float | None = None
    # evaluation grid
    grid_min: float | None = None
    grid_max: float | None = None
    grid_count: int | None = None
    # trimming
    trim: str = "auto"
    trim_lower: list[float] | None = None
    trim_upper: list[float] | None = None

    def validate(self) -> "RunConfig":
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; choose from {', '.join(MODES)}")
        if self.mode == "estimate" and not self.input_path:
            raise ConfigError("estimate mode requires input_path")
        if self.grid_count is not None and self.grid_count < 2:
            raise ConfigError("grid_count must be >= 2")
        if self.grid_min is not None and self.grid_max is not None and not self.grid_min < self.grid_max:
            raise ConfigError("grid_min must be < grid_max")
        if self.bandwidths not in ("auto", "closed_form", "numeric_min", "amise_plugin", "manual"):
            raise ConfigError(f"unknown bandwidths setting {self.bandwidths!r}")
        if self.bandwidths == "manual" and (self.b0 is None or self.b1 is None):
            raise ConfigError("manual bandwidths need b0 and b1")
        if self.trim not in ("auto", "box"):
            raise ConfigError("trim must be 'auto' or 'box'")
        if self.trim == "box" and (self.trim_lower is None or self.trim_upper is None):
            raise ConfigError("trim=box needs trim_lower and trim_upper")
        return self


def _parse_list(raw: str, kind):
    return [kind(tok) for tok in raw.replace(";", ",").split(",") if tok.strip()]


def _coerce(name: str, raw: str):
    types = {f.name: f.type for f in fields(RunConfig)}
    if name not in types:
        raise ConfigError(f"unknown configuration key {name!r}")
    t = str(types[name])
    raw = raw.strip()
    if raw.lower() in ("none", "") and "None" in t:
        return None
    try:
        if "list[int]" in t:
            return _parse_list(raw, int)
        if "list[float]" in t:
            return _parse_list(raw, float)
        if t.startswith("int"):
            return int(raw)
        if t.startswith("float"):
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {name}") from None
    return raw


def read_config_file(path: str | Path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, val = line.split("=", 1)
        out[key.strip().replace("-", "_")] = val.strip()
    return out


def build_config(mode: str, file_values: dict[str, str], overrides: dict[str, str]) -> RunConfig:
    """Merge file values and command-line overrides (overrides win) into a validated config."""
    merged = {**file_values, **overrides}
    merged.pop("mode", None)
    kwargs = {k: _coerce(k, v) for k, v in merged.items()}
    return RunConfig(mode=mode, **kwargs).validate()


def to_jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if hasattr(obj, "__dataclass_fields__"):
        return to_jsonable(asdict(obj))
    return obj


def dump_json(obj: Any, path: str | Path) -> None:
    # json writes floats with repr(), the shortest string that round-trips.
    text = json.dumps(to_jsonable(obj), indent=2, sort_keys=True, allow_nan=False)
    Path(path).write_text(text + "\n")


def write_table(df: pd.DataFrame, path: str | Path, config: dict[str, Any]) -> None:
    """CSV with a leading ``# config=`` comment line holding the resolved configuration."""
    with Path(path).open("w", newline="") as fh:
        fh.write("# config=" + json.dumps(to_jsonable(config), sort_keys=True, allow_nan=False) + "\n")
        df.to_csv(fh, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
