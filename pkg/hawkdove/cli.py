"""
Command-line entry point: `hawkdove train|eval|payoff|analyze|plot`.

Settings come from defaults, then `--config`, then the shortcut flags
(`--scenario`, `--size`, `--seeds`, `--out`), then `--set key=value` in order.
Any failure prints a single line `hawkdove: error: <Name>: <message>` and exits 2.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, NoReturn, Optional, Sequence

from .analysis import (
    AnalysisError,
    asymmetry_report,
    empirical_payoff,
    format_payoff_table,
    pure_nash,
)
from .checkpoint import CheckpointError
from .config import RunConfig, load_run_config, parse_overrides
from .gridworld import ConfigError, Scenario, UsageError
from .harness import evaluate, read_summary_labels, train
from .raster import plot_file, render_payoff, write_png
from .tensor_data import NumericError, ShapeError
from .trajectory import ParseError

logger = logging.getLogger(__name__)

PROG = "hawkdove"
VERBS = ("train", "eval", "payoff", "analyze", "plot")
HANDLED = (
    ConfigError,
    UsageError,
    ShapeError,
    NumericError,
    CheckpointError,
    AnalysisError,
    ParseError,
    OSError,
)


class CommandError(Exception):
    "Bad verb, flag or flag value."


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        raise CommandError(message)


def _add_run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="flat key = value configuration file")
    p.add_argument(
        "--set",
        dest="overrides",
        metavar="KEY=VALUE",
        action="append",
        default=[],
        help="override one configuration key (repeatable, applied last)",
    )
    p.add_argument("--seeds", help="seed list: N, 'a,b,c' or inclusive range 'a..b'")
    p.add_argument("--out", metavar="DIR", help="output directory (key output_dir)")
    p.add_argument(
        "--scenario", choices=[s.value for s in Scenario], help="crossing scenario (key scenario)"
    )
    p.add_argument("--size", type=int, metavar="N", help="square grid side (keys width and height)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog=PROG,
        description="Independent Q-learning on two-agent grid-world crossing games.",
    )
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="log at DEBUG instead of INFO"
    )
    sub = parser.add_subparsers(dest="verb", metavar="VERB", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("train", help="train learners for every seed")
    _add_run_options(p)

    p = sub.add_parser(
        "eval", help="greedy evaluation of saved checkpoints, rollouts under <out>/trajectories"
    )
    _add_run_options(p)
    p.add_argument(
        "--checkpoint",
        nargs="+",
        required=True,
        metavar="PATH",
        help="one checkpoint per agent in play, agent a first",
    )
    p.add_argument("--episodes", type=int, help="greedy episodes (default: eval_episodes)")

    p = sub.add_parser("payoff", help="empirical payoff matrix of the scripted strategies")
    _add_run_options(p)
    p.add_argument("--episodes", type=int, default=1, help="episodes per strategy pair")
    p.add_argument("--discounted", action="store_true", help="use discounted returns")

    p = sub.add_parser("analyze", help="asymmetry report over a finished training run")
    _add_run_options(p)
    p.add_argument("--run", metavar="DIR", help="training output directory (default: --out)")

    p = sub.add_parser("plot", help="render a trajectory or metrics CSV to PNG")
    p.add_argument("input", help="trajectory CSV or metrics.csv")
    p.add_argument("--out", metavar="PATH", help="PNG path (default: input with .png suffix)")
    return parser


def shortcut_overrides(args: argparse.Namespace) -> Dict[str, str]:
    out: Dict[str, str] = {}
    if args.scenario is not None:
        out["scenario"] = args.scenario
    if args.size is not None:
        out["width"] = out["height"] = str(args.size)
    if args.seeds is not None:
        out["seeds"] = args.seeds
    if args.out is not None:
        out["output_dir"] = args.out
    return out


def run_config(args: argparse.Namespace) -> RunConfig:
    overrides = shortcut_overrides(args)
    overrides.update(parse_overrides(args.overrides))
    return load_run_config(args.config, overrides)


def _emit(data: Any, path: Path) -> None:
    text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    sys.stdout.write(text)


def cmd_train(args: argparse.Namespace) -> int:
    run = run_config(args)
    results = train(run)
    failed = 0
    for seed, metrics in sorted(results.items()):
        if metrics.error is not None:
            failed += 1
            print(f"{PROG}: error: seed {seed}: {metrics.error}", file=sys.stderr)
            continue
        final = metrics.final_eval
        labels = "-" if final is None else "/".join(l.value for l in final.joint_label)
        print(f"seed {seed}: {len(metrics.episodes)} episodes, final labels {labels}")
    return 1 if failed else 0


def cmd_eval(args: argparse.Namespace) -> int:
    run = run_config(args)
    episodes = run.eval_episodes if args.episodes is None else args.episodes
    out = Path(run.output_dir)
    summary = evaluate(args.checkpoint, run, episodes, out / "trajectories")
    _emit(summary.to_dict(), out / "eval.json")
    return 0


def cmd_payoff(args: argparse.Namespace) -> int:
    run = run_config(args)
    out = Path(run.output_dir)
    matrix = empirical_payoff(run.scenario, args.episodes, args.discounted, out / "trajectories")
    nash = pure_nash(matrix)
    out.mkdir(parents=True, exist_ok=True)
    (out / "payoff.txt").write_text(format_payoff_table(matrix, nash))
    write_png(render_payoff(matrix, nash), out / "payoff.png")
    _emit({**matrix.to_dict(), "nash": nash.to_dict()}, out / "payoff.json")
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    run = run_config(args)
    run_dir = Path(args.run if args.run is not None else run.output_dir)
    report = asymmetry_report(read_summary_labels(run_dir / "summary.json"))
    _emit(report.to_dict(), Path(run.output_dir) / "analysis.json")
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    out = args.out if args.out is not None else str(Path(args.input).with_suffix(".png"))
    plot_file(args.input, out)
    return 0


COMMANDS = {
    "train": cmd_train,
    "eval": cmd_eval,
    "payoff": cmd_payoff,
    "analyze": cmd_analyze,
    "plot": cmd_plot,
}


def _fail(e: BaseException) -> int:
    message = str(e).replace("\n", " ")
    print(f"{PROG}: error: {type(e).__name__}: {message}", file=sys.stderr)
    return 2


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse `argv`, run one verb and return the process exit code: 0 on success,
    1 when some training seed failed, 2 on any usage or input error.
    """
    try:
        args = build_parser().parse_args(list(argv) if argv is not None else None)
    except CommandError as e:
        return _fail(e)
    except SystemExit as e:
        # --help
        return int(e.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    try:
        return COMMANDS[args.verb](args)
    except HANDLED as e:
        logger.debug("%s failed", args.verb, exc_info=True)
        return _fail(e)


def entry(argv: Optional[List[str]] = None) -> NoReturn:
    sys.exit(main(argv))
