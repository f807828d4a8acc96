"""
newtonheight command-line tool.

    python main.py analyze "(x2-x1^2)^2+x1^5"
    python main.py verify "x1^4+x2^2" --mode decay --csv-dir out/
    python main.py verify "(x2-x1^2)^4" --mode knapp --edge horizontal --eps-seq 4:20

Exit codes: 0 success, 2 parse error, 3 pipeline or precondition error, 4 quadrature
budget exceeded, 5 inconclusive fit (data still written).
"""

import argparse
import json
import logging
import sys

from newtonheight.config import load_config
from newtonheight.errors import FitInconclusiveError, ParseError, PipelineError, PreconditionError, QuadratureBudgetError
from newtonheight.report import analyze, verify_decay, verify_integrability, verify_knapp, verify_sublevel, verify_uniform, write_tables

logger = logging.getLogger("newtonheight")

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_PIPELINE = 3
EXIT_BUDGET = 4
EXIT_INCONCLUSIVE = 5


def _eps_sequence(text):
    """``"4:20"`` -> exponents 4..20 (``eps = 2^-k``)."""
    try:
        low, high = (int(part) for part in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"Expected 'low:high', got '{text}'")
    return list(range(low, high + 1))


def _edge(text):
    return text if text in ("horizontal", "principal") else int(text)


def build_parser():
    parser = argparse.ArgumentParser(prog="newtonheight", description="Newton polyhedra, height and decay checks")
    parser.add_argument("--config", help="Config file (TOML or JSON); defaults to $NEWTONHEIGHT_CONFIG")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(command):
        command.add_argument("expr", help="Phase polynomial, e.g. 'x1^2*x2^2'")
        command.add_argument("--out", help="Write the JSON here instead of standard output")
        command.add_argument("--json", action="store_true", help="Compact single-line JSON")
        command.add_argument("--no-timestamp", action="store_true", help="Omit the timestamp (byte-identical reruns)")
        command.add_argument("--seed", type=int)
        command.add_argument("--threads", type=int)
        command.add_argument("--budget", type=int, help="Quadrature node budget")

    common(sub.add_parser("analyze", help="Run the exact pipeline"))

    verify = sub.add_parser("verify", help="Check a prediction numerically")
    common(verify)
    verify.add_argument("--mode", required=True, choices=["decay", "uniform", "sublevel", "knapp", "integrability"])
    verify.add_argument("--csv-dir", default=".", help="Directory for the CSV tables")
    verify.add_argument("--lambda-min", type=float)
    verify.add_argument("--lambda-max", type=float)
    verify.add_argument("--eps-min", type=float)
    verify.add_argument("--eps-max", type=float)
    verify.add_argument("--edge", type=_edge, default="principal", help="Edge index, 'horizontal' or 'principal'")
    verify.add_argument("--eps-seq", type=_eps_sequence, default=list(range(4, 21)), help="Knapp exponents 'low:high'")
    verify.add_argument("--p", default="2", help="Exponent for the integrability check (rational)")
    return parser


def _apply_flags(config, args):
    overrides = {
        "seed": args.seed,
        "threads": args.threads,
        "budget": args.budget,
        "lambda_min": getattr(args, "lambda_min", None),
        "lambda_max": getattr(args, "lambda_max", None),
        "eps_min": getattr(args, "eps_min", None),
        "eps_max": getattr(args, "eps_max", None),
    }
    config.update({key: value for key, value in overrides.items() if value is not None})
    return config


def _emit(text, out):
    if out:
        with open(out, "w") as output:
            output.write(text + "\n")
        logger.info(f"Report written to {out}")
    else:
        sys.stdout.write(text + "\n")


def _serialize(payload, compact):
    return json.dumps(payload, sort_keys=True, separators=(",", ":")) if compact else json.dumps(payload, indent=2, sort_keys=True)


def cmd_analyze(args, config):
    report = analyze(args.expr, config, timestamp=not args.no_timestamp)
    _emit(_serialize(report.to_dict(), args.json), args.out)
    return EXIT_OK


def cmd_verify(args, config):
    report = analyze(args.expr, config, timestamp=not args.no_timestamp)
    if args.mode == "decay":
        summary = verify_decay(report, config)
    elif args.mode == "uniform":
        summary = verify_uniform(report, config)
    elif args.mode == "sublevel":
        summary = verify_sublevel(report, config)
    elif args.mode == "knapp":
        summary = verify_knapp(report, config, args.edge, args.eps_seq)
    else:
        summary = verify_integrability(report, config, args.p)
    write_tables(summary, args.csv_dir)
    _emit(_serialize(summary.to_dict(), args.json), args.out)
    summary.raise_if_inconclusive()
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    config = _apply_flags(load_config(args.config), args)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else config["logging_level"],
        format="%(asctime)s [%(levelname)s] %(message)s",
        handlers=[logging.StreamHandler(sys.stderr)],
    )

    try:
        command = cmd_analyze if args.command == "analyze" else cmd_verify
        return command(args, config)
    except ParseError as e:
        logger.error(f"Parse error: {e}")
        return EXIT_PARSE
    except QuadratureBudgetError as e:
        logger.error(f"Quadrature budget exceeded: {e} (nodes {e.nodes}, budget {e.budget})")
        return EXIT_BUDGET
    except FitInconclusiveError as e:
        logger.error(f"Fit inconclusive: {e}")
        return EXIT_INCONCLUSIVE
    except (PreconditionError, PipelineError, ValueError) as e:
        logger.error(f"Pipeline error: {e}")
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
