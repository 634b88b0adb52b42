"""Command-line interface.

Commands: simulate, estimate, gen-network, gradcheck. All commands are
pure functions of (arguments, input files, seed): identical inputs give
byte-identical outputs, for any worker count. Exit codes: 0 success,
2 configuration error, 3 data error, 4 estimation failure.

Environment overrides: NETMUNDLAK_SEED, NETMUNDLAK_WORKERS.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import dataio
from .baselines import mundlak_ols
from .config import load_simulation_config, parse_contrast
from .errors import ConfigError, DataError, EstimationError
from .estimator import gme_gnn_estimate
from .gcn import GcnConfig, gradient_check
from .graphs import graph_stats, ws_generate
from .simlab import format_summary_table, run_scenario


def _env_int(name):
    raw = os.environ.get(name)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"environment variable {name}={raw!r} is not an integer") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netmundlak",
        description="Doubly robust exposure-contrast estimation on grouped networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a replication campaign from a config file")
    p_sim.add_argument("--scenario", required=True, help="scenario config file")
    p_sim.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_sim.add_argument("--workers", type=int, default=None)
    p_sim.add_argument("--out-dir", default=".", help="where summary.csv and raw.csv go")

    p_est = sub.add_parser("estimate", help="estimate an exposure contrast from CSV data")
    p_est.add_argument("--nodes", required=True)
    p_est.add_argument("--edges", required=True)
    p_est.add_argument("--method", choices=["gme-gnn", "gnn-only", "mundlak"],
                       default="gme-gnn")
    p_est.add_argument("--exposure", choices=["any-neighbor", "joint4"],
                       default="any-neighbor")
    p_est.add_argument("--contrast", default="1,0", help="exposure levels t,t'")
    p_est.add_argument("--eta", type=float, default=0.01)
    p_est.add_argument("--seed", type=int, default=None)
    p_est.add_argument("--no-normalize", action="store_true",
                       help="report the literal average instead of dividing by B-bar")
    p_est.add_argument("--hidden", type=int, default=16)
    p_est.add_argument("--dropout", type=float, default=0.1)
    p_est.add_argument("--lr", type=float, default=0.001)
    p_est.add_argument("--epochs", type=int, default=300)
    p_est.add_argument("--workers", type=int, default=None,
                       help="accepted for symmetry; estimation is single-process")
    p_est.add_argument("--out", required=True, help="output JSON path")

    p_gen = sub.add_parser("gen-network", help="write a Watts-Strogatz edge-list CSV")
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--k", type=int, required=True)
    p_gen.add_argument("--p", type=float, required=True)
    p_gen.add_argument("--seed", type=int, default=None)
    p_gen.add_argument("--group-id", default="g0")
    p_gen.add_argument("--out", required=True)

    p_grad = sub.add_parser("gradcheck", help="finite-difference audit of the GCN gradients")
    p_grad.add_argument("--instances", type=int, default=20)
    p_grad.add_argument("--seed", type=int, default=None)
    p_grad.add_argument("--tolerance", type=float, default=1e-4)
    return parser


def _effective_seed(args_seed, fallback=0):
    env = _env_int("NETMUNDLAK_SEED")
    if args_seed is not None:
        return args_seed
    if env is not None:
        return env
    return fallback


def _effective_workers(args_workers):
    env = _env_int("NETMUNDLAK_WORKERS")
    if args_workers is not None:
        return max(1, args_workers)
    if env is not None:
        return max(1, env)
    return 1


def cmd_simulate(args) -> int:
    seed = args.seed if args.seed is not None else _env_int("NETMUNDLAK_SEED")
    cfg = load_simulation_config(args.scenario, seed_override=seed)
    workers = _effective_workers(args.workers)
    result = run_scenario(
        cfg.scenario,
        methods=cfg.methods,
        gnn_config=cfg.gnn,
        eta=cfg.eta,
        exposure=cfg.exposure,
        contrast=cfg.contrast,
        n_redraws=cfg.n_redraws,
        workers=workers,
    )
    summary_path, raw_path = dataio.write_simulation_outputs(result, args.out_dir)
    print(format_summary_table(result))
    print(f"wrote {summary_path} and {raw_path}")
    return 0


def cmd_estimate(args) -> int:
    pop = dataio.load_population(args.nodes, args.edges)
    contrast = parse_contrast(args.contrast)
    seed = _effective_seed(args.seed)
    if args.method == "mundlak":
        tau_hat, fit = mundlak_ols(pop)
        payload = {
            "method": "mundlak",
            "tau_hat": tau_hat,
            "coefficients": dict(zip(fit.column_names, map(float, fit.coefficients))),
            "std_errors": dict(zip(fit.column_names, map(float, fit.std_errors))),
            "residual_variance": fit.residual_variance,
        }
        dataio.atomic_write_text(
            args.out, json.dumps(payload, indent=2, sort_keys=True) + "\n"
        )
        print(f"tau_hat={tau_hat:.6g} (mundlak)  ->  {args.out}")
        return 0
    config = GcnConfig(
        hidden=args.hidden,
        dropout=args.dropout,
        learning_rate=args.lr,
        epochs=args.epochs,
        seed=seed,
    )
    estimate = gme_gnn_estimate(
        pop,
        mapping=args.exposure,
        contrast=contrast,
        gnn_config=config,
        eta=args.eta,
        normalize=not args.no_normalize,
        include_balance=(args.method == "gme-gnn"),
    )
    dataio.write_effect_json(args.out, estimate, extra={"seed": seed})
    print(
        f"tau_hat={estimate.tau_hat:.6g} se={estimate.std_error:.6g} "
        f"b_bar={estimate.b_bar:.4f} ({args.method})  ->  {args.out}"
    )
    return 0


def cmd_gen_network(args) -> int:
    seed = _effective_seed(args.seed)
    graph = ws_generate(args.n, args.k, args.p, seed)
    dataio.atomic_write_text(args.out, dataio.edges_csv_text([(args.group_id, graph)]))
    stats = graph_stats(graph)
    print(
        f"nodes={graph.n_nodes} edges={graph.n_edges} "
        f"avg_degree={stats.avg_degree:.2f} avg_path_length={stats.avg_path_length:.4f}"
    )
    return 0


def cmd_gradcheck(args) -> int:
    seed = _effective_seed(args.seed)
    worst = gradient_check(n_instances=args.instances, seed=seed)
    print(f"max relative gradient error over {args.instances} instances: {worst:.3e}")
    if worst >= args.tolerance:
        print(f"FAIL: exceeds tolerance {args.tolerance:g}")
        return 4
    print(f"PASS: below tolerance {args.tolerance:g}")
    return 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "gen-network": cmd_gen_network,
    "gradcheck": cmd_gradcheck,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except EstimationError as exc:
        print(f"estimation failed: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
