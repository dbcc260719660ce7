"""Rate study: train penalized modified networks over a grid of sample sizes.

Each ``(n, replicate)`` cell is an independent job with its own seed, derived
from ``(base_seed, n, replicate)`` only, so the records do not depend on
scheduling.  The slope of ``log2`` median test error against ``log2 n`` is
reported next to the minimax exponent ``-2 beta / (2 beta + d)``.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .bounds import ProblemSpec, architecture_for, tuning_lambda
from .datagen import NoiseModel, make_target, mc_l2_error, sample_dataset
from .network import Architecture, forward, l1_norm, l2sq_norm, effective_nonzeros
from .training import PenaltySpec, TrainConfig, TrainingDiverged, train

RECORD_COLUMNS = (
    "n", "replicate", "seed", "lambda", "train_mse", "test_mse", "stderr",
    "effective_nonzeros", "l1", "l2sq", "wall_seconds",
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class StudyConfig:
    d: int = 1
    beta: float = 1.0
    F: float = 1.0
    sigma: float = 0.2
    noise: str = "gaussian"
    target: str = "holder_abs"
    teacher_depth: int = 1
    teacher_width: int = 4
    n_grid: tuple = (256, 512, 1024, 2048, 4096)
    replicates: int = 5
    penalty: str = "l1"
    lambda_mode: str = "scaled"
    lambda_value: float = 1e-7
    architecture_mode: str = "fixed"
    depth: int = 2
    width: int = 16
    augment_input: bool = True
    clip: bool = True
    step_size: float = 0.05
    epochs: int = 200
    batch_size: Optional[int] = 32
    init_scale: float = 1.0
    test_m: int = 20000
    base_seed: int = 0
    record_wall_time: bool = False

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        object.__setattr__(self, "n_grid", grid)
        if not grid:
            raise ConfigError("n_grid must not be empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("n_grid must be strictly increasing")
        if grid[0] < 2:
            raise ConfigError("sample sizes must be >= 2")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if self.lambda_mode not in ("theoretical", "scaled", "fixed"):
            raise ConfigError(f"unknown lambda_mode {self.lambda_mode!r}")
        if self.architecture_mode not in ("theoretical", "fixed"):
            raise ConfigError(f"unknown architecture_mode {self.architecture_mode!r}")
        if self.penalty not in ("none", "l1", "l2sq"):
            raise ConfigError(f"unknown penalty {self.penalty!r}")

    @property
    def target_exponent(self) -> float:
        return -2 * self.beta / (2 * self.beta + self.d)

    def resolve_lambda(self, n: int) -> float:
        if self.penalty == "none":
            return 0.0
        if self.lambda_mode == "theoretical":
            return tuning_lambda(n)
        if self.lambda_mode == "scaled":
            return self.lambda_value * tuning_lambda(n)
        return float(self.lambda_value)

    def resolve_architecture(self, n: int) -> Architecture:
        extra = 1 if self.augment_input else 0
        if self.architecture_mode == "theoretical":
            a = architecture_for(ProblemSpec(n, self.d, self.beta, self.F, max(self.sigma, 1e-300)))
            return Architecture((self.d + extra,) + a.widths[1:])
        return Architecture.uniform(self.d + extra, self.depth, self.width)


# ----------------------------------------------------------------------------
# config files


_SECTIONS = {
    "problem": ("d", "beta", "F", "sigma", "noise", "target", "teacher_depth", "teacher_width"),
    "study": ("n_grid", "replicates", "test_m", "base_seed", "record_wall_time"),
    "penalty": ("penalty", "lambda_mode", "lambda_value"),
    "model": ("architecture_mode", "depth", "width", "augment_input", "clip"),
    "optimizer": ("step_size", "epochs", "batch_size", "init_scale"),
}

CONFIG_HELP = "\n".join(f"[{sec}] " + ", ".join(keys) for sec, keys in _SECTIONS.items())


def _convert(name: str, raw: str):
    kind = {f.name: f.type for f in fields(StudyConfig)}[name]
    raw = raw.strip()
    try:
        if name == "n_grid":
            return tuple(int(v) for v in raw.replace(",", " ").split())
        if name == "batch_size":
            return None if raw.lower() in ("", "none", "full") else int(raw)
        if kind == "bool":
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc


def parse_config(text: str, base: Optional[StudyConfig] = None) -> StudyConfig:
    """Parse ``key = value`` text grouped in sections; unknown keys are errors."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    values = {}
    for sec in cp.sections():
        if sec not in _SECTIONS:
            raise ConfigError(f"unknown section [{sec}]")
        for key, raw in cp.items(sec):
            if key not in _SECTIONS[sec]:
                raise ConfigError(f"unknown key {key!r} in section [{sec}]")
            values[key] = _convert(key, raw)
    return replace(base or StudyConfig(), **values)


def load_config(path) -> StudyConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def dump_config(cfg: StudyConfig) -> str:
    out = []
    for sec, keys in _SECTIONS.items():
        out.append(f"[{sec}]")
        for k in keys:
            v = getattr(cfg, k)
            if k == "n_grid":
                v = " ".join(str(x) for x in v)
            elif v is None:
                v = "full"
            out.append(f"{k} = {v}")
        out.append("")
    return "\n".join(out)


# ----------------------------------------------------------------------------
# study driver


def cell_seed(base_seed: int, n: int, replicate: int) -> int:
    digest = hashlib.blake2b(f"{n}:{replicate}".encode(), digest_size=8).digest()
    return (int(base_seed) ^ int.from_bytes(digest, "little")) & (2**64 - 1)


@dataclass
class CellRecord:
    n: int
    replicate: int
    seed: int
    lam: float
    train_mse: float
    test_mse: float
    stderr: float
    effective_nonzeros: int
    l1: float
    l2sq: float
    wall_seconds: float
    diverged: bool = False

    def row(self, with_time: bool = True) -> list:
        f = lambda v: f"{v:.17g}"
        return [self.n, self.replicate, self.seed, f(self.lam), f(self.train_mse), f(self.test_mse),
                f(self.stderr), self.effective_nonzeros, f(self.l1), f(self.l2sq),
                f(self.wall_seconds if with_time else 0.0)]


@dataclass
class RateStudyResult:
    config: StudyConfig
    records: list
    slope: float
    target_exponent: float
    medians: dict = field(default_factory=dict)

    def summary_rows(self) -> list:
        rows = []
        for n in self.config.n_grid:
            vals = np.array([r.test_mse for r in self.records if r.n == n and not r.diverged])
            trn = np.array([r.train_mse for r in self.records if r.n == n and not r.diverged])
            if vals.size:
                q25, med, q75 = np.percentile(vals, [25, 50, 75])
                rows.append((n, vals.size, med, q25, q75, q75 - q25, float(np.median(trn))))
            else:
                rows.append((n, 0, math.nan, math.nan, math.nan, math.nan, math.nan))
        return rows

    def to_text(self) -> str:
        lines = [f"{'n':>8} {'cells':>5} {'median test mse':>16} {'IQR':>12} {'median train mse':>17}"]
        for n, c, med, q25, q75, iqr, trn in self.summary_rows():
            lines.append(f"{n:>8} {c:>5} {med:>16.6g} {iqr:>12.4g} {trn:>17.6g}")
        lines.append(f"fitted slope            : {self.slope:.4f}")
        lines.append(f"theoretical exponent    : {self.target_exponent:.4f}  (-2 beta / (2 beta + d))")
        return "\n".join(lines)


def _run_cell(cfg: StudyConfig, n: int, rep: int) -> CellRecord:
    t0 = time.perf_counter()
    seed = cell_seed(cfg.base_seed, n, rep)
    data_seed, train_seed, test_seed = (int(s) for s in np.random.SeedSequence(seed).generate_state(3))
    target = make_target(cfg.target, cfg.beta, cfg.F, cfg.d, seed=cfg.base_seed,
                         depth=cfg.teacher_depth, width=cfg.teacher_width, augment_input=cfg.augment_input)
    ds = sample_dataset(target, NoiseModel(cfg.noise, cfg.sigma), n, cfg.d, seed=data_seed)
    lam = cfg.resolve_lambda(n)
    tcfg = TrainConfig(
        arch=cfg.resolve_architecture(n),
        penalty=PenaltySpec(cfg.penalty, lam),
        step_size=cfg.step_size,
        max_epochs=cfg.epochs,
        batch_size=cfg.batch_size,
        seed=train_seed,
        init_scale=cfg.init_scale,
        clip_bound=cfg.F if cfg.clip else None,
        augment_input=cfg.augment_input,
    )
    try:
        model, trace = train(tcfg, ds)
    except TrainingDiverged:
        nan = math.nan
        return CellRecord(n, rep, seed, lam, nan, nan, nan, 0, nan, nan, time.perf_counter() - t0, diverged=True)
    train_mse = float(np.mean((forward(model, ds.X) - ds.y) ** 2))
    err = mc_l2_error(lambda X: forward(model, X), target, cfg.test_m, seed=test_seed)
    return CellRecord(n, rep, seed, lam, train_mse, err.mse, err.stderr, effective_nonzeros(model),
                      l1_norm(model), l2sq_norm(model), time.perf_counter() - t0)


def _run_cell_args(args):
    return _run_cell(*args)


def fit_slope(points) -> float:
    """Ordinary least-squares slope through ``(x, y)`` points."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] < 2 or np.unique(pts[:, 0]).size < 2:
        raise ValueError("slope fit needs at least 2 distinct abscissae")
    x, y = pts[:, 0], pts[:, 1]
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))


def run_rate_study(cfg: StudyConfig, threads: int = 1, progress=None) -> RateStudyResult:
    cells = [(cfg, n, r) for n in cfg.n_grid for r in range(cfg.replicates)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            records = list(ex.map(_run_cell_args, cells))
    else:
        records = []
        for c in cells:
            records.append(_run_cell(*c))
            if progress:
                progress(records[-1])
    records.sort(key=lambda r: (r.n, r.replicate))
    n_div = sum(r.diverged for r in records)
    if n_div * 2 > len(records):
        raise RuntimeError(f"{n_div} of {len(records)} cells diverged")
    medians = {}
    for n in cfg.n_grid:
        vals = [r.test_mse for r in records if r.n == n and not r.diverged]
        if vals:
            medians[n] = float(np.median(vals))
    pts = [(math.log2(n), math.log2(m)) for n, m in medians.items() if m > 0]
    slope = fit_slope(pts) if len({p[0] for p in pts}) >= 2 else math.nan
    return RateStudyResult(cfg, records, slope, cfg.target_exponent, medians)


# ----------------------------------------------------------------------------
# reports


def records_csv(result: RateStudyResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_COLUMNS)
    for r in result.records:
        w.writerow(r.row(with_time=result.config.record_wall_time))
    return buf.getvalue()


def summary_csv(result: RateStudyResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "cells", "median_test_mse", "q25", "q75", "iqr", "median_train_mse"])
    for n, c, med, q25, q75, iqr, trn in result.summary_rows():
        w.writerow([n, c] + [f"{v:.17g}" for v in (med, q25, q75, iqr, trn)])
    return buf.getvalue()


def timings_csv(result: RateStudyResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "replicate", "wall_seconds"])
    for r in result.records:
        w.writerow([r.n, r.replicate, f"{r.wall_seconds:.6f}"])
    return buf.getvalue()


def write_plot(result: RateStudyResult, path) -> dict:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ns = sorted(result.medians)
    meds = [result.medians[n] for n in ns]
    slope = result.target_exponent
    meta = {"reference_slope": slope, "fitted_slope": result.slope}
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(ns, meds, "o-", base=2, label=f"median test MSE (slope {result.slope:.3f})")
    if ns:
        ref = [meds[0] * (n / ns[0]) ** slope for n in ns]
        ax.loglog(ns, ref, "--", base=2, color="gray", label=f"reference slope {slope:.3f}")
    ax.set_xlabel("n")
    ax.set_ylabel("test MSE")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None, "Description": json.dumps(meta)})
    plt.close(fig)
    return meta


def write_report(result: RateStudyResult, out_dir) -> dict:
    """Write records.csv, summary.csv, timings.csv, rate_plot.svg and study.json."""
    if not result.records:
        raise ValueError("empty study")
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "records": os.path.join(out_dir, "records.csv"),
        "summary": os.path.join(out_dir, "summary.csv"),
        "timings": os.path.join(out_dir, "timings.csv"),
        "plot": os.path.join(out_dir, "rate_plot.svg"),
        "study": os.path.join(out_dir, "study.json"),
    }
    with open(paths["records"], "w", encoding="utf-8", newline="") as fh:
        fh.write(records_csv(result))
    with open(paths["summary"], "w", encoding="utf-8", newline="") as fh:
        fh.write(summary_csv(result))
    with open(paths["timings"], "w", encoding="utf-8", newline="") as fh:
        fh.write(timings_csv(result))
    meta = write_plot(result, paths["plot"])
    with open(paths["study"], "w", encoding="utf-8") as fh:
        json.dump({"fitted_slope": result.slope, "target_exponent": result.target_exponent,
                   "reference_slope": meta["reference_slope"],
                   "config": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(result.config).items()}},
                  fh, indent=1)
    return paths


def read_records_csv(text: str) -> list:
    rows = list(csv.reader(io.StringIO(text)))
    if tuple(rows[0]) != RECORD_COLUMNS:
        raise ValueError("unexpected records header")
    return [dict(zip(RECORD_COLUMNS, r)) for r in rows[1:]]
