# sego/cli.py
"""
Command-line entry point.

    python manage.py run --config bzr_cox2.cfg --seed 7
    python manage.py tree --data data/BZR --index 3 --k 5
    python manage.py selftest

Exit codes: 0 success, 1 failed selftest, 2 configuration error, 3 data error.
"""

import argparse
import logging
import sys
from pathlib import Path

import logzero
from logzero import logger

from codingtree.builder import build_coding_tree, flat_tree
from codingtree.dump import dump_tree
from codingtree.entropy import structural_entropy
from detector.config import CliConfig, Mode, TreePartner, build_config, read_config_file
from detector.experiments import run_experiment
from graphs import fixtures
from graphs.features import FeatureScheme
from graphs.tudataset import parse_tu_dataset
from sego import settings
from sego.exceptions import ConfigurationError, DataIntegrityError, SegoError
from sego.selftest import run_selftest

FIXTURES = {
    "k2": fixtures.k2,
    "k3": fixtures.k3,
    "path3": fixtures.path3,
    "two_triangles": fixtures.two_triangles,
}

# flag dest -> CliConfig field, for the flags whose names differ
_RENAMED = {"runs": "n_runs", "lr": "learning_rate"}


def build_parser():
    parser = argparse.ArgumentParser(prog="sego", description="Structural-entropy guided graph OOD detection")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train, score and evaluate an experiment")
    run.add_argument("--config", type=Path, help="flat key=value file; flags override its values")
    run.add_argument("--mode", choices=[m.value for m in Mode])
    run.add_argument("--id-data", type=Path)
    run.add_argument("--ood-data", type=Path)
    run.add_argument("--k", type=int)
    run.add_argument("--r", type=int)
    run.add_argument("--theta", type=float)
    run.add_argument("--tau", type=float)
    run.add_argument("--seed", type=int)
    run.add_argument("--runs", type=int)
    run.add_argument("--epochs", type=int)
    run.add_argument("--batch-size", type=int)
    run.add_argument("--lr", type=float)
    run.add_argument("--feature-scheme", choices=[s.value for s in FeatureScheme])
    run.add_argument("--tree-partner", choices=[p.value for p in TreePartner])
    run.add_argument("--workers", type=int)
    run.add_argument("--anomaly-label", type=int)
    run.add_argument("--out", type=Path)
    run.add_argument("--cache-dir", type=Path)
    for flag in ("--disable-tree", "--disable-local", "--disable-global", "--score-tree-term"):
        run.add_argument(flag, action="store_true", default=None)

    tree = sub.add_parser("tree", help="print the coding tree of one graph")
    source = tree.add_mutually_exclusive_group(required=True)
    source.add_argument("--data", type=Path, help="TU dataset directory")
    source.add_argument("--fixture", choices=sorted(FIXTURES))
    tree.add_argument("--name", help="dataset file prefix, defaults to the directory name")
    tree.add_argument("--index", type=int, default=0)
    tree.add_argument("--k", type=int, default=5)

    sub.add_parser("selftest", help="run gradient, entropy and loss checks")
    return parser


def flag_values(args):
    skip = {"command", "config"}
    return {_RENAMED.get(key, key): value for key, value in vars(args).items() if key not in skip}


def handle_run(args):
    file_values = read_config_file(args.config) if args.config else {}
    cfg = build_config(CliConfig, file_values, flag_values(args))
    cfg.check_paths()
    Path(cfg.out).mkdir(parents=True, exist_ok=True)
    logzero.logfile(str(Path(cfg.out) / "sego.log"))
    try:
        report = run_experiment(cfg)
    finally:
        logzero.logfile(None)
    print(report.summary())
    return 0


def handle_tree(args):
    if args.fixture:
        g = FIXTURES[args.fixture]()
    else:
        if not args.data.is_dir():
            raise ConfigurationError(f"data: dataset directory {args.data} does not exist")
        dataset = parse_tu_dataset(args.data, args.name or args.data.name)
        if not 0 <= args.index < len(dataset):
            raise ConfigurationError(f"index: {args.index} is out of range for {len(dataset)} graphs")
        g = dataset[args.index]
    tree = build_coding_tree(g, args.k)
    print(dump_tree(g, tree))
    print(f"flat={structural_entropy(g, flat_tree(g)):.6f}")
    print(f"built={structural_entropy(g, tree):.6f}")
    return 0


def handle_selftest(args):
    return run_selftest()


HANDLERS = {
    "run": handle_run,
    "tree": handle_tree,
    "selftest": handle_selftest,
}


def execute_from_command_line(argv=None):
    argv = sys.argv if argv is None else argv
    logzero.loglevel(getattr(logging, settings.LOG_LEVEL, logging.INFO))
    args = build_parser().parse_args(argv[1:])
    try:
        return HANDLERS[args.command](args)
    except ConfigurationError as e:
        logger.error(f"Configuration error: {e}")
        return 2
    except DataIntegrityError as e:
        logger.error(f"Data error: {e}")
        return 3
    except SegoError as e:
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        return 1
