"""Command-line entry points for training and evaluating the generator."""

from __future__ import annotations

import click

from .formats import read_srwt
from .train import TrainConfig, evaluate_operator, report_to_csv, train_generator


@click.group()
def main():
    """Window super-resolution generator training."""


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option("--epochs", default=200, show_default=True)
@click.option("--batch-size", default=64, show_default=True)
@click.option("--lr", default=1e-3, show_default=True)
@click.option("--val-fraction", default=0.1, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--adversarial", default="off", type=click.Choice(["on", "off"]),
              show_default=True)
@click.option("--adv-weight", default=1e-3, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--log", "log_path", default=None, type=click.Path())
def train(dataset, epochs, batch_size, lr, val_fraction, seed, adversarial,
          adv_weight, out_path, log_path):
    """Train the generator on an MGDS dataset and export SRWT weights."""
    cfg = TrainConfig(
        dataset=dataset,
        out_path=out_path,
        epochs=epochs,
        batch_size=batch_size,
        lr=lr,
        val_fraction=val_fraction,
        adversarial=(adversarial == "on"),
        adv_weight=adv_weight,
        seed=seed,
        log_path=log_path,
    )
    train_generator(cfg)
    click.echo(f"trained {epochs} epochs -> {out_path}")


@main.command("eval")
@click.option("--weights", required=True, type=click.Path(exists=True))
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option("--val-fraction", default=0.1, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
def eval_cmd(weights, dataset, val_fraction, seed, out_path):
    """Validation MSE of trained weights vs spline and stencil baselines."""
    report = evaluate_operator(read_srwt(weights), dataset, val_fraction, seed)
    report_to_csv(report, out_path)
    for key in sorted(report):
        click.echo(f"{key}: {report[key]:.6g}")


if __name__ == "__main__":
    main()
