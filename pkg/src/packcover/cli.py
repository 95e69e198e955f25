"""Command-line entry points: solve, bench, gen-data, emit-train, predict-solve.

Results files are JSON Lines with a header record first (command + config,
including the RNG seed), then one record per order in input order.  The same
inputs and seed produce byte-identical files, so wall-clock timings go to a
``<out>.timings.json`` sidecar instead of the results themselves.
"""
from __future__ import annotations

import concurrent.futures
import csv
import json
import time
from dataclasses import asdict
from pathlib import Path

import click

from .bridge import DEFAULT_TIMEOUT, PredictorClient, PredictorError
from .colgen import (
    ColGenConfig,
    prepare_one_shot,
    run_colgen_detailed,
    solve_one_shot,
    spu_to_column,
)
from .datagen import PROFILES, combine_orders, generate_dataset
from .features import TrainingInstance, extract_features
from .fuzzy import fuzzy_match_solve
from .matcher import build_index, matched_spus
from .model import (
    HistoryRecord,
    Order,
    Solution,
    dumps_canonical,
    load_history,
    load_orders,
    save_history,
    save_orders,
)


def colgen_options(f):
    """Flags mirroring ColGenConfig, shared by every solving command."""
    defaults = ColGenConfig()
    opts = [
        click.option("--max-iters", default=defaults.max_iters, show_default=True,
                     help="Cap on pricing iterations."),
        click.option("--epsilon", default=defaults.epsilon, show_default=True,
                     help="Reduced-cost admission threshold."),
        click.option("--warm-start-size", default=defaults.warm_start_size,
                     show_default=True, help="Matched columns sampled into the warm start."),
        click.option("--heuristic-capacity", default=defaults.heuristic_capacity,
                     show_default=True, help="Units per heuristic-generated column."),
        click.option("--heuristic/--no-heuristic", "heuristic_enabled",
                     default=defaults.heuristic_enabled, show_default=True,
                     help="Absorb leftovers with generated columns instead of raw slack."),
        click.option("--relax-demand/--strict-demand", "relax_demand",
                     default=defaults.relax_demand, show_default=True,
                     help="Ignore demand tags when matching."),
        click.option("--rng-seed", default=defaults.rng_seed, show_default=True),
        click.option("--admit-per-iter", default=defaults.admit_per_iter,
                     show_default=True, help="Columns admitted per pricing round."),
        click.option("--node-limit", default=defaults.node_limit, show_default=True,
                     help="Branch-and-bound node budget per integer solve."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def config_from_kwargs(kwargs) -> ColGenConfig:
    config = ColGenConfig(
        max_iters=kwargs.pop("max_iters"),
        epsilon=kwargs.pop("epsilon"),
        warm_start_size=kwargs.pop("warm_start_size"),
        heuristic_capacity=kwargs.pop("heuristic_capacity"),
        heuristic_enabled=kwargs.pop("heuristic_enabled"),
        relax_demand=kwargs.pop("relax_demand"),
        rng_seed=kwargs.pop("rng_seed"),
        admit_per_iter=kwargs.pop("admit_per_iter"),
        node_limit=kwargs.pop("node_limit"),
    )
    config.validate()
    return config


def _load_inputs(orders_file, history_file) -> tuple[list[Order], HistoryRecord]:
    try:
        orders = load_orders(orders_file)
        record = load_history(history_file)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    return orders, record


# ---------------------------------------------------------------------------
# Per-order workers.  Module-level state so ProcessPoolExecutor workers can be
# seeded once via the initializer and then receive bare orders.
# ---------------------------------------------------------------------------

_WORKER: dict = {}


def _init_worker(record, config, predictor_cmd=None, timeout=DEFAULT_TIMEOUT):
    _WORKER["index"] = build_index(record)
    _WORKER["config"] = config
    _WORKER["client"] = (
        PredictorClient(predictor_cmd, timeout) if predictor_cmd else None
    )


def _result_record(order_id: str, solution: Solution, iterations: int) -> dict:
    return {
        "order_id": order_id,
        "status": solution.status,
        "objective": solution.objective,
        "success": solution.is_exact_cover(),
        "column_counts": dict(sorted(solution.column_counts.items())),
        "heuristic_column_counts": dict(sorted(solution.heuristic_column_counts.items())),
        "heuristic_slack": dict(sorted(solution.heuristic_slack.items())),
        "iterations": iterations,
    }


def _solve_worker(order: Order) -> tuple[dict, float]:
    config = _WORKER["config"]
    start = time.perf_counter()
    matched = matched_spus(order, _WORKER["index"], relax_demand=config.relax_demand)
    solution, state = run_colgen_detailed(order, matched, config)
    elapsed_ms = (time.perf_counter() - start) * 1000.0
    return _result_record(order.id, solution, state.iteration), elapsed_ms


def _fuzzy_worker(order: Order) -> tuple[dict, float]:
    config = _WORKER["config"]
    start = time.perf_counter()
    matched = matched_spus(order, _WORKER["index"], relax_demand=config.relax_demand)
    solution = fuzzy_match_solve(order, matched)
    elapsed_ms = (time.perf_counter() - start) * 1000.0
    return _result_record(order.id, solution, 0), elapsed_ms


def _predict_worker(order: Order) -> tuple[dict, float]:
    config = _WORKER["config"]
    client = _WORKER["client"]
    start = time.perf_counter()
    matched = matched_spus(order, _WORKER["index"], relax_demand=config.relax_demand)
    setup = prepare_one_shot(order, matched, config)
    rhs = order.demand
    by_id = {col.id: col for col in setup.rmp_columns}
    initial = [
        (cid, extract_features(by_id[cid], rhs, setup.duals_iter0).to_list())
        for cid in setup.initial_ids
    ]
    candidates = [
        (col.id, extract_features(col, rhs, setup.duals_iter0).to_list())
        for col in setup.candidates
    ]
    fallback_reason = None
    try:
        selected = client.request(order.id, rhs, initial, candidates)
        solution = solve_one_shot(setup, selected)
        record = _result_record(order.id, solution, 0)
        record["selected_count"] = len(selected)
    except PredictorError as exc:
        fallback_reason = str(exc)
        solution, state = run_colgen_detailed(order, matched, config)
        record = _result_record(order.id, solution, state.iteration)
        record["selected_count"] = None
    record["fallback"] = fallback_reason is not None
    if fallback_reason is not None:
        record["fallback_reason"] = fallback_reason
    elapsed_ms = (time.perf_counter() - start) * 1000.0
    return record, elapsed_ms


def _map_orders(worker, orders, jobs, init_args):
    """Run `worker` over orders, preserving input order.

    jobs == 1 runs inline; above that a process pool is used and each worker
    process gets its own index (and predictor subprocess, when configured).
    """
    if jobs <= 1:
        _init_worker(*init_args)
        try:
            return [worker(order) for order in orders]
        finally:
            client = _WORKER.get("client")
            if client is not None:
                client.close()
    with concurrent.futures.ProcessPoolExecutor(
        max_workers=jobs, initializer=_init_worker, initargs=init_args
    ) as pool:
        return list(pool.map(worker, orders, chunksize=8))


def _write_results(out_path, header: dict, rows: list[dict]) -> None:
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_canonical(header) + "\n")
        for row in rows:
            fh.write(dumps_canonical(row) + "\n")


def _write_timings(out_path, per_order: dict[str, float], total_ms: float) -> None:
    sidecar = Path(str(out_path) + ".timings.json")
    payload = {
        "total_ms": round(total_ms, 3),
        "per_order_ms": {k: round(v, 3) for k, v in per_order.items()},
    }
    sidecar.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n")


def _summarize(rows: list[dict], total_ms: float) -> str:
    n = len(rows)
    successes = [r for r in rows if r["success"]]
    rate = len(successes) / n if n else 0.0
    mean_obj = sum(r["objective"] for r in rows) / n if n else 0.0
    return (
        f"orders={n} success_rate={rate:.4f} "
        f"mean_objective={mean_obj:.4f} total_ms={total_ms:.0f}"
    )


@click.group()
def main():
    """Exact set-cover order fulfillment over historical packing columns."""


@main.command("solve")
@click.option("--orders", "orders_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--history", "history_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_file", required=True, type=click.Path(dir_okay=False))
@click.option("--jobs", default=1, show_default=True, help="Parallel per-order workers.")
@colgen_options
def cmd_solve(orders_file, history_file, out_file, jobs, **kwargs):
    """Solve every order by column generation; write JSONL results."""
    config = config_from_kwargs(kwargs)
    orders, record = _load_inputs(orders_file, history_file)
    start = time.perf_counter()
    outcomes = _map_orders(_solve_worker, orders, jobs, (record, config))
    total_ms = (time.perf_counter() - start) * 1000.0
    rows = [row for row, _ in outcomes]
    header = {"command": "solve", "config": asdict(config)}
    _write_results(out_file, header, rows)
    _write_timings(out_file, {r["order_id"]: ms for r, ms in outcomes}, total_ms)
    click.echo(_summarize(rows, total_ms))


@main.command("gen-data")
@click.option("--n-orders", required=True, type=int)
@click.option("--n-history", required=True, type=int)
@click.option("--seed", default=0, show_default=True)
@click.option("--profile", default="paper", show_default=True,
              type=click.Choice(sorted(PROFILES)))
@click.option("--orders-out", required=True, type=click.Path(dir_okay=False))
@click.option("--history-out", required=True, type=click.Path(dir_okay=False))
def cmd_gen_data(n_orders, n_history, seed, profile, orders_out, history_out):
    """Generate a synthetic order set plus fragment history."""
    try:
        orders, record = generate_dataset(n_orders, n_history, rng_seed=seed, profile=profile)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    save_orders(orders_out, orders)
    save_history(history_out, record)
    click.echo(
        f"wrote {len(orders)} orders to {orders_out}, "
        f"{len(record.spus)} history spus to {history_out}"
    )


@main.command("emit-train")
@click.option("--orders", "orders_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--history", "history_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_file", required=True, type=click.Path(dir_okay=False))
@colgen_options
def cmd_emit_train(orders_file, history_file, out_file, **kwargs):
    """Run full column generation and emit one training instance per
    successfully solved order; labels are the admitted column ids."""
    config = config_from_kwargs(kwargs)
    orders, record = _load_inputs(orders_file, history_file)
    index = build_index(record)
    written = 0
    with open(out_file, "w", encoding="utf-8", newline="\n") as fh:
        for order in orders:
            matched = matched_spus(order, index, relax_demand=config.relax_demand)
            solution, state = run_colgen_detailed(order, matched, config)
            if not solution.is_exact_cover():
                continue
            instance = _training_instance(order, matched, state)
            fh.write(dumps_canonical(instance.to_dict()) + "\n")
            written += 1
    click.echo(f"wrote {written} instances ({len(orders)} orders) to {out_file}")


def _training_instance(order, matched, state) -> TrainingInstance:
    rhs = order.demand
    duals = state.duals_iter0
    by_id = {col.id: col for col in state.in_rmp}
    initial = [(cid, extract_features(by_id[cid], rhs, duals)) for cid in state.initial_ids]
    initial_set = set(state.initial_ids)
    candidates = [
        (col.id, extract_features(col, rhs, duals))
        for col in (spu_to_column(s) for s in matched)
        if col.id not in initial_set
    ]
    label = {entry.column_id for entry in state.trace}
    return TrainingInstance(
        order_id=order.id,
        rhs=rhs,
        initial_column_ids=list(state.initial_ids),
        initial_columns=initial,
        candidates=candidates,
        label=label,
    )


@main.command("predict-solve")
@click.option("--orders", "orders_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--history", "history_file", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_file", required=True, type=click.Path(dir_okay=False))
@click.option("--predictor", "predictor_cmd", required=True,
              help="Command line of a subprocess speaking the bridge protocol.")
@click.option("--timeout", default=DEFAULT_TIMEOUT, show_default=True,
              help="Seconds to wait per response before falling back to full CG.")
@click.option("--jobs", default=1, show_default=True)
@colgen_options
def cmd_predict_solve(orders_file, history_file, out_file, predictor_cmd, timeout, jobs, **kwargs):
    """One-shot solve: a predictor picks the admitted columns, then a single
    integer solve finishes; no pricing loop.  Predictor failures fall back to
    full column generation, marked in the output."""
    config = config_from_kwargs(kwargs)
    orders, record = _load_inputs(orders_file, history_file)
    start = time.perf_counter()
    outcomes = _map_orders(
        _predict_worker, orders, jobs, (record, config, predictor_cmd, timeout)
    )
    total_ms = (time.perf_counter() - start) * 1000.0
    rows = [row for row, _ in outcomes]
    header = {
        "command": "predict-solve",
        "config": asdict(config),
        "predictor": predictor_cmd,
    }
    _write_results(out_file, header, rows)
    _write_timings(out_file, {r["order_id"]: ms for r, ms in outcomes}, total_ms)
    fallbacks = sum(1 for r in rows if r["fallback"])
    click.echo(_summarize(rows, total_ms) + f" fallbacks={fallbacks}")


@main.command("bench")
@click.option("--orders", "orders_file", type=click.Path(exists=True, dir_okay=False),
              help="Use this order set instead of generating one.")
@click.option("--history", "history_file", type=click.Path(exists=True, dir_okay=False),
              help="Use this history instead of generating one.")
@click.option("--n-orders", default=500, show_default=True)
@click.option("--n-history", default=3200, show_default=True)
@click.option("--seed", default=0, show_default=True,
              help="Seed for generation and for the K-combination shuffle.")
@click.option("--profile", default="paper", show_default=True,
              type=click.Choice(sorted(PROFILES)))
@click.option("--k-values", default="1", show_default=True,
              help="Comma-separated K values; each combines K orders into one.")
@click.option("--methods", default="colgen,fuzzy", show_default=True,
              help="Comma-separated subset of colgen,fuzzy,mpn.")
@click.option("--predictor", "predictor_cmd", default=None,
              help="Bridge command; required when methods include mpn.")
@click.option("--timeout", default=DEFAULT_TIMEOUT, show_default=True)
@click.option("--jobs", default=1, show_default=True)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@colgen_options
def cmd_bench(orders_file, history_file, n_orders, n_history, seed, profile,
              k_values, methods, predictor_cmd, timeout, jobs, out_dir, **kwargs):
    """Compare methods over one order set; write a comparison table and a
    per-K success-rate series as CSV."""
    config = config_from_kwargs(kwargs)
    method_list = [m.strip() for m in methods.split(",") if m.strip()]
    known = {"colgen": _solve_worker, "fuzzy": _fuzzy_worker, "mpn": _predict_worker}
    if not method_list:
        raise click.ClickException("no methods given")
    for method in method_list:
        if method not in known:
            raise click.ClickException(f"unknown method {method!r}")
    if "mpn" in method_list and not predictor_cmd:
        raise click.ClickException("method 'mpn' requires --predictor")
    try:
        ks = sorted({int(k) for k in k_values.split(",") if k.strip()})
        if not ks or min(ks) < 1:
            raise ValueError
    except ValueError:
        raise click.ClickException(f"bad --k-values {k_values!r}")

    if orders_file or history_file:
        if not (orders_file and history_file):
            raise click.ClickException("--orders and --history go together")
        orders, record = _load_inputs(orders_file, history_file)
    else:
        orders, record = generate_dataset(n_orders, n_history, rng_seed=seed, profile=profile)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table_rows = []
    sweep: dict[int, dict[str, float]] = {}
    for k in ks:
        merged = combine_orders(orders, k, rng_seed=seed)
        for method in method_list:
            worker = known[method]
            init_args = (
                (record, config, predictor_cmd, timeout)
                if method == "mpn"
                else (record, config)
            )
            start = time.perf_counter()
            outcomes = _map_orders(worker, merged, jobs, init_args)
            total_ms = (time.perf_counter() - start) * 1000.0
            rows = [row for row, _ in outcomes]
            n = len(rows)
            successes = [r for r in rows if r["success"]]
            rate = len(successes) / n if n else 0.0
            mean_obj = sum(r["objective"] for r in rows) / n if n else 0.0
            mean_obj_success = (
                sum(r["objective"] for r in successes) / len(successes)
                if successes else 0.0
            )
            table_rows.append({
                "method": method,
                "k": k,
                "orders": n,
                "success_rate": f"{rate:.6f}",
                "mean_objective": f"{mean_obj:.6f}",
                "mean_objective_success": f"{mean_obj_success:.6f}",
                "total_ms": f"{total_ms:.0f}",
            })
            sweep.setdefault(k, {})[method] = rate
            click.echo(
                f"k={k} method={method} orders={n} success_rate={rate:.4f} "
                f"mean_objective={mean_obj:.4f} total_ms={total_ms:.0f}"
            )

    table_path = out / "bench_table.csv"
    with open(table_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(table_rows[0].keys()))
        writer.writeheader()
        writer.writerows(table_rows)
    sweep_path = out / "bench_k_sweep.csv"
    with open(sweep_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k"] + method_list)
        for k in ks:
            writer.writerow([k] + [f"{sweep[k].get(m, 0.0):.6f}" for m in method_list])
    click.echo(f"wrote {table_path} and {sweep_path}")


if __name__ == "__main__":
    main()
