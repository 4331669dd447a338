"""Seeded Monte-Carlo sweeps with CSV and SVG output.

A sweep varies one scenario parameter over a grid. For every grid value
and every trial a channel set is drawn from the generator seeded with
``(master_seed, value_index, trial_index)``, and every requested method is
solved on it twice: with the surface optimized and with the surface off.
Within a trial all methods and both arms see the same channels.

Work is split into (series, value) cells that can run in separate
processes; results are assembled in grid order, so the output does not
depend on the worker count.
"""

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional
from xml.sax.saxutils import escape

import numpy as np

from .beamformers import METHOD_TAGS, solve
from .channels import SystemConfig, realize_channels, trial_rng
from .exceptions import ConfigError, IRSLabError
from .metrics import average_receive_power, evaluate
from .validation import check_count

VARIABLES = ("P_T_dBm", "P_I_dBm", "N", "sigma2_irs_dBm", "irs_x_position_m")
AXIS_LABELS = {
    "P_T_dBm": "BS transmit power P_T (dBm)",
    "P_I_dBm": "IRS power P_I (dBm)",
    "N": "IRS elements N",
    "sigma2_irs_dBm": "IRS noise variance (dBm)",
    "irs_x_position_m": "IRS x position (m)",
}
CSV_HEADER = ("variable", "value", "method", "irs", "mean_sum_rate", "stderr", "mean_snr_db")
DEFAULT_TRIALS = 200


def _sig6(x):
    return float(f"{float(x):.6g}")


def _fmt(x):
    return f"{float(x):.6g}"


@dataclass
class SweepSpec:
    """One sweep: a variable, its grid, the methods and the base scenario.

    ``series`` optionally lists labelled config overrides (e.g. different
    user counts); each series is swept separately and its label is appended
    to the method name in the output.
    """

    variable: str
    values: list
    methods: list
    base_config: SystemConfig
    trials: Optional[int] = None
    master_seed: int = 0
    series: list = field(default_factory=list)
    leakage: str = "closed-form"

    def __post_init__(self):
        if self.variable not in VARIABLES:
            raise ConfigError(f"unknown sweep variable {self.variable!r}; expected one of {VARIABLES}")
        if not len(self.values):
            raise ConfigError("sweep values must be nonempty")
        self.values = [float(v) for v in self.values]
        if not all(np.isfinite(self.values)):
            raise ConfigError("sweep values must be finite")
        d = np.diff(self.values)
        if len(d) and not (np.all(d > 0) or np.all(d < 0)):
            raise ConfigError("sweep values must be strictly monotone")
        if self.variable == "N" and any(v != int(v) or v < 1 for v in self.values):
            raise ConfigError("N values must be positive integers")
        if not self.methods or any(m not in METHOD_TAGS for m in self.methods):
            raise ConfigError(f"methods must be a nonempty subset of {METHOD_TAGS}")
        if isinstance(self.base_config, dict):
            self.base_config = SystemConfig.from_dict(self.base_config)
        if self.trials is None:
            self.trials = 1 if self.base_config.regime.name == "LoS+LoS" else DEFAULT_TRIALS
        self.trials = check_count(self.trials, "trials")
        self.master_seed = check_count(self.master_seed, "master_seed", minimum=0)
        if self.leakage not in ("closed-form", "full"):
            raise ConfigError("leakage must be 'closed-form' or 'full'")
        for s in self.series:
            if not isinstance(s, dict) or "label" not in s:
                raise ConfigError("each series entry needs a 'label'")
        # surface multiples must hold for every cell before any work starts
        if "TLL-MMSE" in self.methods:
            for label, cfg in self.series_configs():
                for v in self.values:
                    c = apply_variable(cfg, self.variable, v)
                    if c.N % c.K:
                        raise ConfigError(
                            f"TLL-MMSE needs N divisible by K (N={c.N}, K={c.K}{label and ', ' + label})")

    def series_configs(self):
        if not self.series:
            return [("", self.base_config)]
        out = []
        for s in self.series:
            over = {k: v for k, v in s.items() if k != "label"}
            data = self.base_config.to_dict()
            if "K" in over:
                # uniform per-user lists follow the new user count
                for key in ("Q", "L"):
                    if key not in over and len(set(data[key])) == 1:
                        data[key] = data[key][:1]
            data.update(over)
            out.append((str(s["label"]), SystemConfig.from_dict(data)))
        return out

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("sweep spec must be a JSON object")
        known = {"variable", "values", "methods", "base_config", "trials", "master_seed",
                 "series", "leakage", "name", "description"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown sweep spec fields: {sorted(unknown)}")
        missing = {"variable", "values", "methods", "base_config"} - set(data)
        if missing:
            raise ConfigError(f"missing sweep spec fields: {sorted(missing)}")
        kw = {k: v for k, v in data.items() if k not in ("name", "description")}
        return cls(**kw)

    @classmethod
    def load(cls, path):
        text = _read_spec_text(path)
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from None
        return cls.from_dict(data)


def recipe_names():
    root = resources.files("irs_lab") / "recipes"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def _read_spec_text(path):
    p = Path(path)
    if p.is_file():
        return p.read_text(encoding="utf-8")
    name = p.name[:-5] if p.name.endswith(".json") else p.name
    if name in recipe_names():
        return (resources.files("irs_lab") / "recipes" / f"{name}.json").read_text(encoding="utf-8")
    raise ConfigError(f"sweep spec {path!r} not found (built-in recipes: {', '.join(recipe_names())})")


def apply_variable(cfg, variable, value):
    if variable == "N":
        return cfg.replace(N=int(value))
    if variable == "irs_x_position_m":
        pos = dict(cfg.positions)
        irs = np.array(pos["irs"], dtype=float)
        irs[0] = float(value)
        pos["irs"] = irs
        return cfg.replace(positions=pos)
    return cfg.replace(**{variable: float(value)})


@dataclass
class SweepRow:
    variable: str
    value: float
    method: str
    irs: str
    mean_sum_rate: float
    stderr: float
    mean_snr_db: float

    def __post_init__(self):
        for name in ("value", "mean_sum_rate", "stderr", "mean_snr_db"):
            setattr(self, name, _sig6(getattr(self, name)))
        if self.irs not in ("with", "without"):
            raise ConfigError(f"irs flag must be 'with' or 'without', got {self.irs!r}")

    def cells(self):
        return (self.variable, _fmt(self.value), self.method, self.irs,
                _fmt(self.mean_sum_rate), _fmt(self.stderr), _fmt(self.mean_snr_db))


@dataclass
class SweepResult:
    """Aggregated sweep rows plus per-cell error messages and diagnostics."""

    rows: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    variable: Optional[str] = None

    def to_csv_text(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow(r.cells())
        return buf.getvalue()

    def __eq__(self, other):
        return isinstance(other, SweepResult) and self.to_csv_text() == other.to_csv_text()

    def series(self):
        """``{(method, irs): [(value, mean, stderr), ...]}`` in grid order."""
        out = {}
        for r in self.rows:
            out.setdefault((r.method, r.irs), []).append((r.value, r.mean_sum_rate, r.stderr))
        return out

    def cell(self, value, method, irs):
        for r in self.rows:
            if r.method == method and r.irs == irs and r.value == _sig6(value):
                return r
        raise KeyError((value, method, irs))


def _stderr(x):
    x = np.asarray(x, dtype=float)
    return float(np.std(x, ddof=1) / np.sqrt(x.size)) if x.size > 1 else 0.0


def _run_cell(task):
    """All trials of one (series, value) cell. Returns per (method, arm) stats."""
    (cfg_dict, variable, value, value_idx, methods, trials, master_seed, leakage,
     diagnostics) = task
    cfg = apply_variable(SystemConfig.from_dict(cfg_dict), variable, value)
    arms = ((True, "with"), (False, "without"))
    rates = {(m, a): [] for m in methods for _, a in arms}
    snrs = {key: [] for key in rates}
    errors = {}
    diag = []
    for t in range(trials):
        ch = realize_channels(cfg, trial_rng(master_seed, value_idx, t))
        for m in methods:
            for use_irs, arm in arms:
                key = (m, arm)
                if key in errors:
                    continue
                try:
                    sol = solve(m, ch, cfg, use_irs=use_irs)
                    rep = evaluate(sol, ch, cfg, seed=t, leakage=leakage)
                except IRSLabError as exc:
                    errors[key] = f"{type(exc).__name__}: {exc}"
                    continue
                rates[key].append(rep.sum_rate)
                snrs[key].append(float(np.mean(rep.per_user_snr_dB)))
                if diagnostics and t == 0:
                    diag.append({"value": value, "method": m, "irs": arm,
                                 "solution": sol.to_dict(),
                                 "average_receive_power": average_receive_power(sol, ch, cfg)})
    out = {}
    for key in rates:
        if key in errors:
            out[key] = (math.nan, math.nan, math.nan)
        else:
            out[key] = (float(np.mean(rates[key])), _stderr(rates[key]), float(np.mean(snrs[key])))
    return out, errors, diag


def _worker_count(requested):
    n = os.cpu_count() or 1
    if requested is not None:
        n = min(n, check_count(requested, "workers"))
    cap = os.environ.get("IRS_LAB_THREADS")
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ConfigError(f"IRS_LAB_THREADS must be an integer, got {cap!r}") from None
    return max(1, n)


def run_sweep(spec, workers=None, diagnostics=False):
    """Run every cell of ``spec`` and aggregate mean sum-rates.

    Parameters
    ----------
    spec : SweepSpec
    workers : int, optional
        Process count; capped by the CPU count and ``IRS_LAB_THREADS``.
    diagnostics : bool
        Keep the first trial's solution and receive-power diagnostic per cell.

    Returns
    -------
    SweepResult
        Rows ordered by series, value, method, then with/without surface.
        Cells whose solver failed hold NaN and add an entry to ``errors``.
    """
    tasks, labels = [], []
    for label, cfg in spec.series_configs():
        d = cfg.to_dict()
        for vi, v in enumerate(spec.values):
            tasks.append((d, spec.variable, v, vi, list(spec.methods), spec.trials,
                          spec.master_seed, spec.leakage, diagnostics))
            labels.append(label)
    n = min(_worker_count(workers), len(tasks))
    if n > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            outputs = list(pool.map(_run_cell, tasks))
    else:
        outputs = [_run_cell(t) for t in tasks]

    result = SweepResult(variable=spec.variable)
    for task, label, (stats, errors, diag) in zip(tasks, labels, outputs):
        value = task[2]
        for m in spec.methods:
            name = f"{m} {label}" if label else m
            for arm in ("with", "without"):
                mean, se, snr = stats[(m, arm)]
                result.rows.append(SweepRow(spec.variable, value, name, arm, mean, se, snr))
                if (m, arm) in errors:
                    result.errors.append({"value": value, "method": name, "irs": arm,
                                          "error": errors[(m, arm)]})
        for d in diag:
            d["method"] = f"{d['method']} {label}" if label else d["method"]
            result.diagnostics.append(d)
    return result


def emit_csv(result, path):
    """Write the sweep table (UTF-8, LF line endings, 6 significant digits)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(result.to_csv_text())
    return Path(path)


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != CSV_HEADER:
            raise ConfigError(f"unexpected CSV header {header!r}")
        rows = [SweepRow(r[0], float(r[1]), r[2], r[3], float(r[4]), float(r[5]), float(r[6]))
                for r in reader]
    return SweepResult(rows=rows, variable=rows[0].variable if rows else None)


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def _nice_ticks(lo, hi, count=5):
    if hi <= lo:
        return [lo]
    return list(np.linspace(lo, hi, count))


def emit_svg_plot(result, path, x_label=None, y_label="Sum-rate (bit/s/Hz)", width=720, height=440):
    """Line chart with one polyline per (method, irs) series and a legend."""
    series = result.series()
    if not series:
        raise ConfigError("cannot plot an empty sweep result")
    left, right, top, bottom = 70, 210, 20, 60
    pw, ph = width - left - right, height - top - bottom
    xs = [v for pts in series.values() for v, _, _ in pts]
    ys = [m for pts in series.values() for _, m, _ in pts if math.isfinite(m)]
    x0, x1 = min(xs), max(xs)
    y0, y1 = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 1.0, x1 + 1.0
    if y1 == y0:
        y0, y1 = y0 - 1.0, y1 + 1.0

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return top + (y1 - y) / (y1 - y0) * ph

    variable = result.variable or (result.rows[0].variable if result.rows else "")
    x_label = x_label or AXIS_LABELS.get(variable, variable)
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<g font-family="sans-serif" font-size="12">',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for t in _nice_ticks(x0, x1):
        out.append(f'<text x="{sx(t):.2f}" y="{top + ph + 16}" text-anchor="middle">{t:.4g}</text>')
    for t in _nice_ticks(y0, y1):
        out.append(f'<text x="{left - 6}" y="{sy(t) + 4:.2f}" text-anchor="end">{t:.4g}</text>')
    out.append(f'<text x="{left + pw / 2:.2f}" y="{height - 16}" text-anchor="middle">'
               f'{escape(x_label)}</text>')
    out.append(f'<text x="16" y="{top + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {top + ph / 2:.2f})">{escape(y_label)}</text>')
    for i, ((method, irs), pts) in enumerate(series.items()):
        color = _PALETTE[i % len(_PALETTE)]
        dash = "" if irs == "with" else ' stroke-dasharray="6 4"'
        coords = " ".join(f"{sx(v):.2f},{sy(m):.2f}" for v, m, _ in pts if math.isfinite(m))
        out.append(f'<polyline class="series" data-series="{escape(method)}|{irs}" fill="none" '
                   f'stroke="{color}" stroke-width="2"{dash} points="{coords}"/>')
        ly = top + 14 + 18 * i
        out.append(f'<line x1="{left + pw + 12}" y1="{ly}" x2="{left + pw + 36}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"{dash}/>')
        out.append(f'<text class="legend" x="{left + pw + 42}" y="{ly + 4}">'
                   f'{escape(method)} ({irs} IRS)</text>')
    out += ["</g>", "</svg>", ""]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(out))
    return Path(path)
