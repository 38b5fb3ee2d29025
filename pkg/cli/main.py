"""Command-line entry point.

    sim-check test-mean --data F [--c 1.0] [--B 499] [--alpha 0.10] [--seed S] [--out R]
    sim-check test-law  --data F [--gy-start G] ...
    sim-check mc-level  --model mean-homo --n 100 --p 2 --c-grid 0.5,1,2 --reps 200
    sim-check mc-power  --model law --n 200 --delta-grid 0,0.1 --reps 200
    sim-check mc-probe  --model law --n 400 --reps 100

Flags override the values of a --config manifest. Exit codes: 0 success,
2 degenerate statistic, 1 input or configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from cli.datafile import load_dataset
from cli.reports import write_probe_report, write_study_report, write_test_report
from core.errors import DegenerateStatisticError, SimCheckError
from core.manifest import Command, RunConfig, merge_raw
from core.pipeline import run_test
from experiments.generators import model_from_block
from experiments.studies import perturbation_stability_probe, run_level_study, run_power_study

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_DEGENERATE = 2


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON run manifest; flags override its values")
    parser.add_argument("--c", type=float, help="bandwidth factor, h = c n^(-2/9)")
    parser.add_argument("--h", type=float, help="raw bandwidth h, bypasses --c")
    parser.add_argument("--B", type=int, help="bootstrap replicates (499 mean, 199 law)")
    parser.add_argument("--alpha", type=float, help="test level (default 0.10)")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--out", help="report path (stdout when omitted)")
    parser.add_argument("--threads", type=int, help="worker threads")
    parser.add_argument("--phi", choices=["empirical", "normal"], help="law test CDF transform")
    parser.add_argument("--max-evals", type=int, help="Nelder-Mead evaluation cap per start")
    parser.add_argument("--starts", type=int, help="optimizer starts for the observed fit")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")


def _model(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", choices=["mean-homo", "mean-hetero", "law"], help="simulation model")
    parser.add_argument("--n", type=int, help="sample size")
    parser.add_argument("--p", type=int, help="covariate dimension")
    parser.add_argument("--delta", type=float, help="departure from the null")
    parser.add_argument("--sigma", type=float, help="noise scale of the mean model")
    parser.add_argument("--mixing", choices=["mixture", "convex"], help="law model alternative")
    parser.add_argument("--reps", type=int,
                        help="Monte Carlo replications (default 500/250 mean, 1000/500 law; 100 for mc-probe)")
    parser.add_argument("--known-index", action="store_true", default=None,
                        help="use the true index instead of estimating it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sim-check",
                                     description="Tests of the single-index assumption")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in (Command.TEST_MEAN.value, Command.TEST_LAW.value):
        p = sub.add_parser(name)
        p.add_argument("--data", help="CSV with header y,x1,...,xp")
        if name == Command.TEST_LAW.value:
            p.add_argument("--gy-start", type=float, help="starting value of the rank bandwidth")
        _common(p)

    level = sub.add_parser(Command.MC_LEVEL.value)
    _common(level)
    _model(level)
    level.add_argument("--c-grid", help="comma-separated bandwidth factors")

    power = sub.add_parser(Command.MC_POWER.value)
    _common(power)
    _model(power)
    power.add_argument("--delta-grid", help="comma-separated alternatives, must include 0")
    power.add_argument("--null-reps", type=int,
                       help="replications for the delta = 0 cell (default: --reps, else the null default)")

    probe = sub.add_parser(Command.MC_PROBE.value)
    _common(probe)
    _model(probe)
    probe.add_argument("--exponents", help="perturbation sizes n^(-e), comma-separated e")
    return parser


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    def get(name: str):
        return getattr(args, name, None)

    raw: Dict[str, Any] = {
        "command": args.command,
        "data": get("data"),
        "c": get("c"),
        "h": get("h"),
        "B": get("B"),
        "alpha": get("alpha"),
        "seed": get("seed"),
        "out": get("out"),
        "threads": get("threads"),
        "phi": get("phi"),
        "reps": get("reps"),
        "null_reps": get("null_reps"),
        "known_index": get("known_index"),
        "c_grid": get("c_grid"),
        "delta_grid": get("delta_grid"),
        "probe_exponents": get("exponents"),
        "optimizer": {
            "gy_start": get("gy_start"),
            "max_evals": get("max_evals"),
            "starts": get("starts"),
        },
    }
    if args.command.startswith("mc-"):
        raw["model"] = {
            "kind": get("model"),
            "n": get("n"),
            "p": get("p"),
            "delta": get("delta"),
            "sigma": get("sigma"),
            "mixing": get("mixing"),
        }
    return raw


def load_config(args: argparse.Namespace) -> RunConfig:
    overrides = overrides_from_args(args)
    if args.config:
        return RunConfig.from_file(args.config, overrides)
    base = {"optimizer": {}, "model": {}} if args.command.startswith("mc-") else {"optimizer": {}}
    return RunConfig.from_dict(merge_raw(base, overrides))


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def execute(config: RunConfig) -> None:
    if config.command in (Command.TEST_MEAN, Command.TEST_LAW):
        dataset = load_dataset(config.data)
        report = run_test(dataset, config)
        write_test_report(report, config.out)
        return

    cfg = model_from_block(config.model)
    common = dict(optimizer=config.optimizer, threads=config.threads,
                  known_index=config.known_index, phi=config.phi)
    if config.command is Command.MC_LEVEL:
        report = run_level_study(cfg, config.c_grid, config.bootstrap_size, config.replications,
                                 config.alpha, config.seed, **common)
        write_study_report(report, config.out)
    elif config.command is Command.MC_POWER:
        report = run_power_study(cfg, config.delta_grid, config.c, config.bootstrap_size,
                                 config.replications, config.alpha, config.seed,
                                 null_reps=config.null_replications, **common)
        write_study_report(report, config.out)
    else:
        summaries = [
            perturbation_stability_probe(cfg, cfg.n ** -e, config.replications, config.seed,
                                         c=config.c, phi=config.phi)
            for e in config.probe_exponents
        ]
        write_probe_report(summaries, config.out)


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        config = load_config(args)
        execute(config)
    except DegenerateStatisticError as e:
        logger.error("%s", e)
        return EXIT_DEGENERATE
    except (SimCheckError, ValueError, OSError) as e:
        logger.error("%s", e)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
