"""order-ltr command line: generate, train, infer, benchmark, evaluate, dwell-benchmark."""

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from order_ltr.config import DwellBenchConfig, GenerateConfig, get_settings, load_config
from order_ltr.errors import ConfigError, OrderLTRError
from order_ltr.evaluation import evaluate_groups, group_sessions, run_split_protocol
from order_ltr.models import RunManifest
from order_ltr.payoff_gain import PayoffGainModel, infer_order, infer_order_assignment, train_alternating
from order_ltr.plackett_luce import PLModel, infer_pl, train_pl
from order_ltr.storage import (
    load_ground_truth,
    load_lists,
    load_model,
    load_sessions,
    save_ground_truth,
    save_model,
    write_manifest,
    write_orders,
    write_sessions,
    write_table,
)
from order_ltr.synthetic import (
    BenchConfig,
    generate_dataset,
    generate_dwell_sessions,
    make_ground_truth,
    relevance_order,
    run_benchmark,
)

logger = logging.getLogger(__name__)

EX_OK = 0
EX_MAX_ITERATIONS = 2
EX_USAGE = 64
EX_DATAERR = 65

METHODS = ("listmle", "weighted-listmle", "payoff-gain")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


class _Run:
    """Collects what a command read and wrote, for its manifest."""

    def __init__(self, command: str, argv: list[str]):
        self.command = command
        self.argv = argv
        self.started = time.perf_counter()
        self.seed: int | None = None
        self.config: dict = {}
        self.inputs: dict[str, str] = {}
        self.outputs: dict[str, str] = {}
        self.warnings: list[str] = []

    def finish(self, primary: Path, exit_code: int = EX_OK) -> int:
        manifest = RunManifest(
            command=self.command,
            argv=self.argv,
            seed=self.seed,
            config=self.config,
            inputs=self.inputs,
            outputs=self.outputs,
            duration_seconds=time.perf_counter() - self.started,
            exit_code=exit_code,
            warnings=self.warnings,
        )
        write_manifest(primary, manifest)
        return exit_code


def cmd_generate(args, run: _Run) -> int:
    cfg = load_config(args.config, GenerateConfig, get_settings().run_defaults(), seed=args.seed)
    run.seed = cfg.seed
    run.config = cfg.model_dump()
    truth_seed, data_seed = np.random.SeedSequence(cfg.seed).spawn(2)
    gt = make_ground_truth(cfg.n, cfg.d, truth_seed, g_star=cfg.gain_vector, cov_scale=cfg.cov_scale)
    if cfg.orders_per_list is None:
        data = generate_dataset(gt, cfg.num_sessions, data_seed)
    else:
        data = generate_dwell_sessions(
            gt, cfg.num_sessions, cfg.orders_per_list, data_seed, cfg.dwell_scale, cfg.noise
        )

    truth_out = args.truth_out or args.out.with_name(f"{args.out.stem}.truth.json")
    write_sessions(args.out, data)
    try:
        save_ground_truth(truth_out, gt)
    except OSError:
        args.out.unlink(missing_ok=True)
        raise
    run.outputs = {"sessions": str(args.out), "ground_truth": str(truth_out)}
    logger.info(f"Wrote {len(data)} sessions to {args.out} and ground truth to {truth_out}")
    return run.finish(args.out)


def cmd_train(args, run: _Run) -> int:
    settings = get_settings()
    data = load_sessions(args.sessions)
    run.inputs = {"sessions": str(args.sessions)}

    if args.method == "payoff-gain":
        cfg = settings.altmin_config(eta=args.eta, eps=args.eps)
        lam = settings.lam if args.lam is None else args.lam
        run.config = {"method": args.method, "lambda": lam, **cfg.model_dump()}
        model = train_alternating(data, lam, cfg)
    else:
        cfg = settings.gd_config(step_size=args.step_size, max_iters=args.max_iters, tol=args.tol)
        run.config = {"method": args.method, **cfg.model_dump()}
        if args.method == "listmle":
            if args.truth is not None:
                gt = load_ground_truth(args.truth)
                run.inputs["ground_truth"] = str(args.truth)
                data = data.with_orders((relevance_order(gt, s.items) for s in data), score=1.0)
            else:
                data = data.with_orders((s.shown_order for s in data), score=1.0)
        model = train_pl(data, cfg, weighted=args.method == "weighted-listmle")

    if model.history.stalled:
        run.warnings.append(f"line search stalled after {model.history.iterations} iterations")
    save_model(args.out, model)
    run.outputs = {"model": str(args.out)}
    logger.info(f"Wrote {args.method} model to {args.out}")
    return run.finish(args.out, EX_OK if model.history.converged else EX_MAX_ITERATIONS)


def cmd_infer(args, run: _Run) -> int:
    model = load_model(args.model)
    lists = load_lists(args.lists)
    run.inputs = {"model": str(args.model), "lists": str(args.lists)}
    run.config = {"solver": args.solver}

    match model:
        case PLModel():
            orders = [infer_pl(model, items) for items in lists]
        case PayoffGainModel() if args.solver == "auto":
            orders = [infer_order(model, items) for items in lists]
        case PayoffGainModel():
            orders = [infer_order_assignment(model, items, args.solver) for items in lists]

    write_orders(args.out, orders)
    run.outputs = {"orders": str(args.out)}
    logger.info(f"Wrote {len(orders)} orders to {args.out}")
    return run.finish(args.out)


def cmd_benchmark(args, run: _Run) -> int:
    cfg = load_config(args.config, BenchConfig, get_settings().run_defaults(), seed=args.seed, workers=args.workers)
    run.seed = cfg.seed
    run.config = cfg.model_dump()
    rows = run_benchmark(cfg)
    write_table(args.out, rows)
    run.outputs = {"table": str(args.out)}
    return run.finish(args.out)


def cmd_evaluate(args, run: _Run) -> int:
    models = {}
    for spec in args.model:
        name, sep, path = spec.partition("=")
        path = Path(path) if sep else Path(spec)
        name = name if sep else path.stem
        if name in models:
            raise ConfigError(f"model name {name!r} given twice")
        models[name] = load_model(path)
        run.inputs[f"model:{name}"] = str(path)
    data = load_sessions(args.sessions)
    run.inputs["sessions"] = str(args.sessions)

    groups = group_sessions(data)
    run.config = {
        "gain": args.gain,
        "num_groups": len(groups),
        "num_single_order_groups": sum(1 for g in groups if len(g.observed) == 1),
    }
    rows = evaluate_groups(models, groups, args.gain)
    write_table(args.out, rows)
    run.outputs = {"report": str(args.out)}
    return run.finish(args.out)


def cmd_dwell_benchmark(args, run: _Run) -> int:
    cfg = load_config(
        args.config, DwellBenchConfig, get_settings().run_defaults(), seed=args.seed, workers=args.workers
    )
    run.seed = cfg.seed
    run.config = cfg.model_dump()
    truth_seed, data_seed = np.random.SeedSequence(cfg.seed).spawn(2)
    gt = make_ground_truth(cfg.n, cfg.d, truth_seed, g_star=cfg.gain_vector, cov_scale=cfg.cov_scale)
    data = generate_dwell_sessions(gt, cfg.num_lists, cfg.orders_per_list, data_seed, cfg.dwell_scale, cfg.noise)
    rows = run_split_protocol(data, cfg.split, cfg.gd, cfg.altmin, cfg.lam, cfg.ndcg_gain, cfg.workers)
    write_table(args.out, rows)
    run.outputs = {"report": str(args.out)}
    return run.finish(args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="order-ltr", description="Order-aware learning to rank")
    parser.add_argument("--log-level", default=None, help="Logging level (default from ORDER_LTR_LOG_LEVEL or INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="Generate synthetic sessions and their ground truth")
    p.add_argument("--config", type=Path, help="JSON GenerateConfig")
    p.add_argument("--seed", type=int, help="Override the config seed")
    p.add_argument("--out", type=Path, required=True, help="Sessions file to write")
    p.add_argument("--truth-out", type=Path, help="Ground-truth file (default: <out stem>.truth.json)")
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("train", help="Train a model on a sessions file")
    p.add_argument("sessions", type=Path)
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--truth", type=Path, help="Ground truth; listmle then trains on relevance orders")
    p.add_argument("--lambda", dest="lam", type=float, help="Ridge regularizer on the gains")
    p.add_argument("--eta", type=float, help="Projected-gradient step size")
    p.add_argument("--eps", type=float, help="Alternating-minimization stopping threshold")
    p.add_argument("--step-size", type=float, help="Initial ListMLE line-search step")
    p.add_argument("--max-iters", type=int, help="ListMLE iteration cap")
    p.add_argument("--tol", type=float, help="ListMLE loss-decrease threshold")
    p.add_argument("--out", type=Path, required=True, help="Model file to write")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("infer", help="Predict the best order for each list")
    p.add_argument("model", type=Path)
    p.add_argument("lists", type=Path)
    p.add_argument("--solver", choices=("auto", "exact", "greedy"), default="auto")
    p.add_argument("--out", type=Path, required=True, help="Orders file to write")
    p.set_defaults(handler=cmd_infer)

    p = sub.add_parser("benchmark", help="Mean-score comparison on synthetic data, per gain vector")
    p.add_argument("--config", type=Path, help="JSON BenchConfig")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", type=Path, required=True, help="CSV table to write")
    p.set_defaults(handler=cmd_benchmark)

    p = sub.add_parser("evaluate", help="NDCG and top-1 score of models on grouped sessions")
    p.add_argument("sessions", type=Path)
    p.add_argument("--model", action="append", required=True, metavar="NAME=PATH")
    p.add_argument("--gain", choices=("linear", "exponential"), default="linear")
    p.add_argument("--out", type=Path, required=True, help="CSV report to write")
    p.set_defaults(handler=cmd_evaluate)

    p = sub.add_parser("dwell-benchmark", help="Split-averaged evaluation on synthetic dwell-time sessions")
    p.add_argument("--config", type=Path, help="JSON DwellBenchConfig")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out", type=Path, required=True, help="CSV report to write")
    p.set_defaults(handler=cmd_dwell_benchmark)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=(args.log_level or get_settings().log_level).upper())

    run = _Run(args.command, argv)
    try:
        return args.handler(args, run)
    except (ConfigError, ValidationError) as e:
        logger.error(f"{args.command}: {e}")
        return EX_USAGE
    except (OrderLTRError, ValueError) as e:
        logger.error(f"{args.command}: {e}")
        return EX_DATAERR
    except OSError as e:
        logger.error(f"{args.command}: cannot write output: {e}")
        return EX_DATAERR


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
