"""Command-line entry points: train, eval, serve."""
from __future__ import annotations

import click
import torch

from .data import load_instances, split_train_eval
from .model_io import load_model, save_model
from .net import PriceNet
from .serve import serve_forever
from .train import BATCH_SIZE, LEARNING_RATE, evaluate, train_model


@click.group()
def main() -> None:
    """Learned column pricing for the set-cover solver."""


@main.command("train")
@click.option("--data", "data_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_file", required=True, type=click.Path(dir_okay=False))
@click.option("--epochs", default=10, show_default=True)
@click.option("--batch-size", default=BATCH_SIZE, show_default=True)
@click.option("--lr", default=LEARNING_RATE, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--eval-count", default=0, show_default=True,
              help="Hold out this many instances for a per-epoch eval score.")
def cmd_train(data_file, out_file, epochs, batch_size, lr, seed, eval_count):
    """Fit the pointer network on an emitted training file."""
    instances = [i for i in load_instances(data_file) if i.candidate_ids]
    if eval_count:
        train_set, eval_set = split_train_eval(
            instances, len(instances) - eval_count, eval_count, seed=seed
        )
    else:
        train_set, eval_set = instances, None
    if not train_set:
        raise click.ClickException("no usable training instances")
    torch.manual_seed(seed)
    model = PriceNet()
    train_model(
        model, train_set, epochs=epochs, batch_size=batch_size, lr=lr,
        seed=seed, eval_instances=eval_set, log=click.echo,
    )
    save_model(model, out_file)
    click.echo(f"wrote {out_file} ({len(train_set)} train instances)")


@main.command("eval")
@click.option("--model", "model_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--data", "data_file", required=True, type=click.Path(exists=True, dir_okay=False))
def cmd_eval(model_file, data_file):
    """Mean greedy F1 of a saved model on a labeled file."""
    model = load_model(model_file)
    instances = [i for i in load_instances(data_file) if i.candidate_ids]
    if not instances:
        raise click.ClickException("no instances with candidates")
    click.echo(f"instances={len(instances)} f1={evaluate(model, instances):.4f}")


@main.command("serve")
@click.option("--model", "model_file", required=True, type=click.Path(exists=True, dir_okay=False))
def cmd_serve(model_file):
    """Answer bridge requests on stdin until EOF."""
    serve_forever(load_model(model_file))


if __name__ == "__main__":
    main()
