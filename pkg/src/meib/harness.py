"""Experiment sweeps over the synthetic benchmark and result emission.

Every sweep cell trains the regularized model ("MEIB") and the same network
with all betas forced to zero ("DNN") on identical data, initialization and
batch order. Cells are independent and may run in worker processes; rows
are always sorted by cell key before they are returned.
"""

import csv
import dataclasses
import itertools
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from meib.data_io import fit_standardizer
from meib.entropy import KernelConfig
from meib.errors import ConfigError, MeibError
from meib.model import (
    TrainConfig,
    build_model,
    evaluate,
    input_weight_norms,
    probe_mi,
    train,
)
from meib.synth import SynthConfig, generate

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
KINDS = ("noise_sweep", "dim_sweep", "sample_sweep", "beta_grid", "single_train")
METHODS = ("MEIB", "DNN")
RESULT_COLUMNS = [
    "experiment", "kind", "value1", "value2", "seed", "method",
    "test_error", "mi_view1", "mi_view2", "wall_ms", "epochs",
]

DEFAULT_NOISE_LEVELS = [0.2, 0.4, 0.6, 0.8, 1.0, 1.2]
DEFAULT_EXTRA_DIMS = [5, 15, 25, 35, 45, 55]
DEFAULT_SAMPLE_SIZES = [50, 100, 200, 500, 1000]
DEFAULT_BETA_GRID = [0.0, 1e-5, 5e-5, 1e-4, 5e-4, 1e-3, 5e-3, 1e-2]

_DEFAULT_VALUES = {
    "noise_sweep": DEFAULT_NOISE_LEVELS,
    "dim_sweep": DEFAULT_EXTRA_DIMS,
    "sample_sweep": DEFAULT_SAMPLE_SIZES,
    "beta_grid": DEFAULT_BETA_GRID,
    "single_train": [1.0],
}


@dataclass
class ExperimentConfig:
    kind: str = "noise_sweep"
    name: str = ""
    values: list = None
    # data
    s: int = 500
    latent_dim: int = 20
    extra_dim: int = 5
    noise_factor: float = 1.0
    train_fraction: float = 0.8
    noise_is_variance: bool = True
    standardize: bool = False
    # model
    encoders: list = field(default_factory=lambda: [[512, 512, 512], [512]])
    fusion_width: int = 256
    n_classes: int = 10
    betas: list = field(default_factory=lambda: [1e-3, 1e-3])
    kernel: dict = field(default_factory=dict)
    # optimization
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    epochs: int = 100
    batch_size: int = 100
    patience: int = 20
    probe_size: int = 200
    # repetition and output
    repeats: int = 5
    seed_base: int = 0
    include_baseline: bool = True
    record_wall_time: bool = True
    weight_norm_dim: int = 55
    threads: int = 1
    output_dir: str = "results"
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if self.values is None:
            self.values = list(_DEFAULT_VALUES[self.kind])
        if not self.name:
            self.name = self.kind
        if not self.values:
            raise ConfigError("sweep values must be non-empty")
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported config schema_version {self.schema_version}")
        if len(self.betas) != len(self.encoders):
            raise ConfigError("one beta per view encoder is required")
        if len(self.encoders) != 2:
            raise ConfigError("the synthetic benchmark has exactly two views")
        try:
            self.kernel_config()
        except MeibError as exc:
            raise ConfigError(f"invalid kernel settings: {exc}") from exc

    def kernel_config(self) -> KernelConfig:
        return KernelConfig(**self.kernel)

    def train_config(self, seed) -> TrainConfig:
        return TrainConfig(self.epochs, self.batch_size, self.optimizer, self.learning_rate,
                           seed, self.patience, self.probe_size)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def load_config(path, **overrides) -> ExperimentConfig:
    """Read a YAML (or JSON) config; ``None``-valued overrides are ignored."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    raw.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {unknown}")
    try:
        return ExperimentConfig(**raw)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass
class Cell:
    """One training run: a sweep point, a repetition seed and a method."""

    value1: float
    value2: float | None
    seed: int
    method: str

    def key(self):
        return (self.value1, -1.0 if self.value2 is None else self.value2, self.seed, METHODS.index(self.method))


@dataclass
class SweepRow:
    experiment: str
    kind: str
    value1: float
    value2: float | None
    seed: int
    method: str
    test_error: float
    mi_view1: float
    mi_view2: float
    wall_ms: float
    epochs: int


@dataclass
class SweepResult:
    config: ExperimentConfig
    rows: list
    weight_norms: list = field(default_factory=list)
    failures: list = field(default_factory=list)


def _cell_settings(cfg: ExperimentConfig, cell: Cell):
    """Synthetic-data config and betas for one cell."""
    s, extra, a = cfg.s, cfg.extra_dim, cfg.noise_factor
    betas = list(cfg.betas)
    if cfg.kind == "noise_sweep":
        a = float(cell.value1)
    elif cfg.kind == "dim_sweep":
        extra = int(cell.value1)
    elif cfg.kind == "sample_sweep":
        s = int(cell.value1)
    elif cfg.kind == "beta_grid":
        betas = [float(cell.value1), float(cell.value2)]
    if cell.method == "DNN":
        betas = [0.0] * len(betas)
    synth = SynthConfig(s=s, latent_dim=cfg.latent_dim, extra_dim=extra, noise_factor=a,
                        seed=cell.seed, train_fraction=cfg.train_fraction,
                        noise_is_variance=cfg.noise_is_variance)
    return synth, betas


def run_cell(cfg: ExperimentConfig, cell: Cell, with_norms=False):
    """Train and evaluate one cell; returns ``(row, weight_norms or None)``."""
    synth, betas = _cell_settings(cfg, cell)
    data = generate(synth)
    train_set, test_set = data.train, data.test
    if cfg.standardize:
        st = fit_standardizer(train_set)
        train_set, test_set = st.apply(train_set), st.apply(test_set)
    # Initialization and batch order use streams decoupled from the data seed.
    model = build_model(train_set.view_dims, cfg.encoders, cfg.fusion_width, cfg.n_classes,
                        betas, seed=[cell.seed, 1], kernel_cfg=cfg.kernel_config())
    result = train(model, train_set, cfg.train_config([cell.seed, 2]))
    err = evaluate(model, test_set)
    probe = test_set if test_set.n >= 2 else train_set
    mi = probe_mi(model, probe)
    wall = round(result.wall_ms, 3) if cfg.record_wall_time else 0.0
    row = SweepRow(cfg.name, cfg.kind, cell.value1, cell.value2, cell.seed, cell.method,
                   err, mi[0], mi[1], wall, result.epochs_run)
    norms = input_weight_norms(model) if with_norms else None
    log.info("%s %s v1=%s v2=%s seed=%d err=%.4f", cfg.name, cell.method, cell.value1,
             cell.value2, cell.seed, err)
    return row, norms


def _cells(cfg: ExperimentConfig) -> list:
    seeds = [cfg.seed_base + r for r in range(cfg.repeats)]
    cells = []
    if cfg.kind == "beta_grid":
        for b1, b2 in itertools.product(cfg.values, cfg.values):
            cells += [Cell(float(b1), float(b2), sd, "MEIB") for sd in seeds]
        if cfg.include_baseline:
            cells += [Cell(0.0, 0.0, sd, "DNN") for sd in seeds]
    else:
        methods = METHODS if cfg.include_baseline else ("MEIB",)
        for v in cfg.values:
            cells += [Cell(float(v), None, sd, m) for sd in seeds for m in methods]
    return sorted(cells, key=Cell.key)


def _run_cell_safe(args):
    cfg, cell, with_norms = args
    try:
        return cell, *run_cell(cfg, cell, with_norms), None
    except MeibError as exc:
        return cell, None, None, f"{type(exc).__name__}: {exc}"


def run_sweep(cfg: ExperimentConfig, threads=None) -> SweepResult:
    """Run every cell of ``cfg``; failed cells are reported, not fabricated."""
    threads = threads or cfg.threads
    norm_value = float(cfg.weight_norm_dim) if cfg.kind == "dim_sweep" else None
    jobs = [(cfg, c, c.method == "MEIB" and c.value1 == norm_value) for c in _cells(cfg)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_run_cell_safe, jobs))
    else:
        outcomes = [_run_cell_safe(j) for j in jobs]
    result = SweepResult(cfg, [])
    for cell, row, norms, err in sorted(outcomes, key=lambda o: o[0].key()):
        if err is not None:
            log.warning("cell %s failed: %s", cell, err)
            result.failures.append((cell, err))
            continue
        result.rows.append(row)
        if norms is not None:
            result.weight_norms.append((cell.seed, norms))
    return result


def _expect_kind(cfg, kind):
    if cfg.kind != kind:
        raise ConfigError(f"expected a {kind} config, got {cfg.kind}")


def run_noise_sweep(cfg: ExperimentConfig, threads=None) -> SweepResult:
    _expect_kind(cfg, "noise_sweep")
    return run_sweep(cfg, threads)


def run_dim_sweep(cfg: ExperimentConfig, threads=None) -> SweepResult:
    """Errors per extra dimension plus first-layer weight norms at ``weight_norm_dim``."""
    _expect_kind(cfg, "dim_sweep")
    return run_sweep(cfg, threads)


def run_sample_sweep(cfg: ExperimentConfig, threads=None) -> SweepResult:
    _expect_kind(cfg, "sample_sweep")
    return run_sweep(cfg, threads)


def run_beta_grid(cfg: ExperimentConfig, threads=None) -> SweepResult:
    _expect_kind(cfg, "beta_grid")
    return run_sweep(cfg, threads)


RUNNERS = {
    "noise_sweep": run_noise_sweep,
    "dim_sweep": run_dim_sweep,
    "sample_sweep": run_sample_sweep,
    "beta_grid": run_beta_grid,
    "single_train": run_sweep,
}


# --- aggregation ----------------------------------------------------------------

def summarize(rows) -> list:
    """Mean, standard deviation and count of test error per (value, method) cell."""
    groups = {}
    for r in rows:
        groups.setdefault((r.value1, r.value2, r.method), []).append(r)
    out = []
    for (v1, v2, method), grp in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1] or -1.0, kv[0][2])):
        errs = np.array([r.test_error for r in grp])
        mi1 = np.array([r.mi_view1 for r in grp])
        mi2 = np.array([r.mi_view2 for r in grp])
        out.append({
            "value1": v1, "value2": v2, "method": method, "n": len(grp),
            "mean_error": float(errs.mean()),
            "std_error": float(errs.std(ddof=1)) if len(grp) > 1 else 0.0,
            "mean_mi_view1": float(mi1.mean()), "mean_mi_view2": float(mi2.mean()),
        })
    return out


def weight_norm_summary(result: SweepResult, informative: int) -> dict:
    """Mean first-layer column norm over informative vs redundant inputs, view by view."""
    per_seed = []
    for seed, norms in result.weight_norms:
        entry = {"seed": seed}
        for i, n in enumerate(norms):
            entry[f"view{i + 1}_informative"] = float(n[:informative].mean())
            entry[f"view{i + 1}_redundant"] = float(n[informative:].mean())
        per_seed.append(entry)
    return {"per_seed": per_seed}


def best_betas(rows) -> list:
    """Lowest mean-error nonzero ``(beta1, beta2)`` cell of a beta grid.

    Ties go to the smaller total beta. Used to fix the betas of the other
    sweeps from a grid run on held-out seeds.
    """
    cells = [s for s in summarize(rows)
             if s["method"] == "MEIB" and s["value2"] is not None and (s["value1"] > 0 or s["value2"] > 0)]
    if not cells:
        raise ConfigError("no nonzero-beta grid cells to select from")
    best = min(cells, key=lambda s: (s["mean_error"], s["value1"] + s["value2"]))
    return [best["value1"], best["value2"]]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else "nan"
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(row[h]) for h in header])


def emit_results(result: SweepResult, out_dir) -> list:
    """Write results, summary, per-method plot data, norms and a config snapshot."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from exc
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory {out} is not writable")
    written = []

    path = out / "results.csv"
    _write_csv(path, RESULT_COLUMNS, [dataclasses.asdict(r) for r in result.rows])
    written.append(path)

    summary = summarize(result.rows)
    path = out / "summary.csv"
    _write_csv(path, ["value1", "value2", "method", "n", "mean_error", "std_error",
                      "mean_mi_view1", "mean_mi_view2"], summary)
    written.append(path)

    for method in METHODS:
        pts = [{"x": s["value1"] if s["value2"] is None else f"{s['value1']!r}|{s['value2']!r}",
                "mean": s["mean_error"], "std": s["std_error"]}
               for s in summary if s["method"] == method]
        if not pts and result.rows:
            continue
        path = out / f"plotdata_{method}.csv"
        _write_csv(path, ["x", "mean", "std"], pts)
        written.append(path)

    if result.weight_norms:
        path = out / "weight_norms.csv"
        rows = []
        for seed, norms in result.weight_norms:
            for view, n in enumerate(norms):
                rows += [{"seed": seed, "view": view + 1, "input_dim": j + 1, "l2_norm": float(x)}
                         for j, x in enumerate(n)]
        _write_csv(path, ["seed", "view", "input_dim", "l2_norm"], rows)
        written.append(path)

    if result.failures:
        path = out / "failures.json"
        path.write_text(json.dumps([{"cell": dataclasses.asdict(c), "error": e}
                                    for c, e in result.failures], indent=2))
        written.append(path)

    path = out / "config.yaml"
    path.write_text(yaml.safe_dump(result.config.to_dict(), sort_keys=True))
    written.append(path)
    return written


def read_results(path) -> list:
    """Parse a ``results.csv`` back into :class:`SweepRow` objects."""
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(SweepRow(
                rec["experiment"], rec["kind"], float(rec["value1"]),
                float(rec["value2"]) if rec["value2"] else None, int(rec["seed"]),
                rec["method"], float(rec["test_error"]), float(rec["mi_view1"]),
                float(rec["mi_view2"]), float(rec["wall_ms"]), int(rec["epochs"]),
            ))
    return rows
