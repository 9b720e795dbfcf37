"""Command-line entry points.

asklearn run   --config exp.json [--seed N] [--strategy S] [--out DIR] [--resume]
asklearn serve --config exp.json --port 8000 [... same overrides]

The config file is JSON whose keys are the ExperimentConfig field names;
the flags override seed, strategy, and output directory after loading.
"""

import argparse
import sys

from .engine import STRATEGIES, ExperimentConfig, run_experiment
from .errors import AskLearnError


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="path to a JSON experiment config")
    parser.add_argument("--seed", type=int, default=None, help="override the base rng seed")
    parser.add_argument(
        "--strategy", choices=STRATEGIES, default=None, help="override the query strategy"
    )
    parser.add_argument("--out", default=None, help="override the output directory")
    parser.add_argument(
        "--resume",
        action="store_true",
        help="continue from per-trial checkpoints in the output directory",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asklearn", description="batch active learning with calibrated models"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a simulated-oracle experiment to CSV")
    _add_common(run_p)

    serve_p = sub.add_parser("serve", help="serve the human-in-the-loop annotation API")
    _add_common(serve_p)
    serve_p.add_argument("--port", type=int, default=8000, help="HTTP port")
    serve_p.add_argument("--host", default="127.0.0.1", help="bind address")
    serve_p.add_argument(
        "--frontend", default=None, help="directory with the built annotation UI"
    )
    return parser


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    overrides = {"seed": args.seed, "strategy": args.strategy, "out_dir": args.out}
    if args.resume:
        overrides["resume"] = True
    return ExperimentConfig.from_json(args.config, **overrides)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args)
        if args.command == "run":
            if config.oracle_kind == "human":
                raise AskLearnError(
                    "a human oracle needs the annotation service; use `asklearn serve`"
                )
            trials = run_experiment(config)
            for records in trials:
                if records:
                    last = records[-1]
                    print(
                        f"seed {last.trial_seed}: {len(records)} rounds, "
                        f"final accuracy {last.accuracy:.4f}, ece {last.ece:.4f}"
                    )
            if config.out_dir:
                print(f"wrote CSVs to {config.out_dir}")
        else:
            from .service import serve_experiment

            serve_experiment(
                config, port=args.port, host=args.host, frontend_dir=args.frontend
            )
    except AskLearnError as exc:
        print(f"asklearn: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
