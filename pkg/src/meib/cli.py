"""``meib`` command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 runtime or numeric failure.
"""

import json
import logging
import sys
from pathlib import Path

import click

from meib import harness
from meib.data_io import CsvViewSpec, export_multiview_csv, load_multiview_csv
from meib.errors import ConfigError, MeibError
from meib.model import build_model, evaluate, load_checkpoint, probe_mi, save_checkpoint, train
from meib.synth import SynthConfig, generate

EXIT_CONFIG = 1
EXIT_RUNTIME = 2


def _load(config, out, seed, repeats, threads, kind=None, betas_from=None):
    overrides = {"output_dir": out, "seed_base": seed, "repeats": repeats, "threads": threads}
    if betas_from is not None:
        path = Path(betas_from)
        try:
            rows = harness.read_results(path / "results.csv" if path.is_dir() else path)
        except (OSError, KeyError, ValueError) as exc:
            raise ConfigError(f"cannot read beta-grid results {path}: {exc}") from exc
        overrides["betas"] = harness.best_betas(rows)
    if kind is not None:
        overrides["kind"] = kind
    return harness.load_config(config, **overrides)


def _guard(fn):
    try:
        return fn()
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except (MeibError, ArithmeticError, FloatingPointError) as exc:
        click.echo(f"runtime error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)


def _common(fn):
    fn = click.option("--threads", type=int, default=None, help="Worker processes for sweep cells.")(fn)
    fn = click.option("--repeats", type=int, default=None, help="Seeds per sweep point.")(fn)
    fn = click.option("--seed", type=int, default=None, help="Seed base.")(fn)
    fn = click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory.")(fn)
    fn = click.option("--config", "config", type=click.Path(), required=True)(fn)
    return fn


@click.group()
@click.option("-v", "--verbose", count=True)
def main(verbose):
    """Multi-view matrix-entropy information bottleneck experiments."""
    level = logging.WARNING - 10 * verbose
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(message)s")


def _sweep_command(name, kind):
    @_common
    @click.option("--betas-from", type=click.Path(exists=True), default=None,
                  help="Take betas from the best nonzero cell of a beta-grid results.csv.")
    def command(config, out, seed, repeats, threads, betas_from):
        def go():
            cfg = _load(config, out, seed, repeats, threads, kind, betas_from)
            if betas_from:
                click.echo(f"betas {cfg.betas} from {betas_from}")
            result = harness.RUNNERS[kind](cfg)
            paths = harness.emit_results(result, cfg.output_dir)
            for s in harness.summarize(result.rows):
                click.echo(f"{s['value1']!r:>10} {'' if s['value2'] is None else repr(s['value2']):>8} "
                           f"{s['method']:<5} error {s['mean_error']:.4f} +- {s['std_error']:.4f} (n={s['n']})")
            click.echo(f"wrote {len(paths)} files to {cfg.output_dir}")
            if result.failures:
                sys.exit(EXIT_RUNTIME)
        _guard(go)

    command.__doc__ = f"Run a {kind.replace('_', ' ')} and emit CSV results."
    return main.command(name)(command)


for _name, _kind in [("noise-sweep", "noise_sweep"), ("dim-sweep", "dim_sweep"),
                     ("sample-sweep", "sample_sweep"), ("beta-grid", "beta_grid")]:
    _sweep_command(_name, _kind)


def _dataset(cfg, seed):
    return generate(SynthConfig(s=cfg.s, latent_dim=cfg.latent_dim, extra_dim=cfg.extra_dim,
                                noise_factor=cfg.noise_factor, seed=seed,
                                train_fraction=cfg.train_fraction,
                                noise_is_variance=cfg.noise_is_variance))


@main.command("train")
@_common
@click.option("--checkpoint", type=click.Path(dir_okay=False), default=None,
              help="Where to save the trained model (default: <out>/model.npz).")
def train_cmd(config, out, seed, repeats, threads, checkpoint):
    """Train one model on synthetic data and save a checkpoint."""
    def go():
        cfg = _load(config, out, seed, repeats, threads, "single_train")
        data = _dataset(cfg, cfg.seed_base)
        model = build_model(data.train.view_dims, cfg.encoders, cfg.fusion_width, cfg.n_classes,
                            cfg.betas, seed=[cfg.seed_base, 1], kernel_cfg=cfg.kernel_config())
        result = train(model, data.train, cfg.train_config([cfg.seed_base, 2]))
        out_dir = Path(cfg.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = Path(checkpoint) if checkpoint else out_dir / "model.npz"
        save_checkpoint(model, path)
        history = [{"epoch": h.epoch, "total": h.total, "ce": h.ce,
                    "mi": h.per_view_mi, "accuracy": h.accuracy} for h in result.history]
        (out_dir / "history.json").write_text(json.dumps(history, indent=1))
        click.echo(f"test error {evaluate(model, data.test):.4f} after {result.epochs_run} epochs")
        click.echo(f"saved {path}")
    _guard(go)


@main.command("eval")
@click.option("--checkpoint", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--config", type=click.Path(), default=None, help="Synthetic-data settings.")
@click.option("--csv", "csv_paths", multiple=True, type=click.Path(exists=True),
              help="Evaluate on CSV views instead (one --csv per view).")
@click.option("--seed", type=int, default=None)
def eval_cmd(checkpoint, config, csv_paths, seed):
    """Report test error and per-view I(X;Z) of a saved model."""
    def go():
        model = load_checkpoint(checkpoint)
        if csv_paths:
            data = load_multiview_csv(CsvViewSpec(list(csv_paths)))
        elif config:
            cfg = _load(config, None, seed, None, None, "single_train")
            data = _dataset(cfg, cfg.seed_base).test
        else:
            raise ConfigError("eval needs --config or --csv")
        click.echo(f"error {evaluate(model, data):.4f}")
        mi = probe_mi(model, data)
        click.echo("mi_bits " + " ".join(f"{v:.4f}" for v in mi))
    _guard(go)


@main.command("gen-data")
@_common
def gen_data(config, out, seed, repeats, threads):
    """Generate the synthetic two-view dataset and export it as CSV."""
    def go():
        cfg = _load(config, out, seed, repeats, threads, "single_train")
        data = _dataset(cfg, cfg.seed_base)
        out_dir = Path(cfg.output_dir)
        paths = export_multiview_csv(data.train, out_dir / "train")
        paths += export_multiview_csv(data.test, out_dir / "test")
        for p in paths:
            click.echo(str(p))
    _guard(go)


if __name__ == "__main__":
    main()
