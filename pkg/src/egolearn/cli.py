"""Command-line front end.

Every training command is a thin wrapper over one pipeline stage, so the
CLI and the Python API produce identical artifacts.
"""

import argparse
import dataclasses
import sys

from .errors import EgoLearnError
from .graph import DATASET_KINDS, dataset_stats, load_ego_dataset
from .pipeline import (
    STAGES,
    PipelineConfig,
    config_text,
    load_config,
    run_pipeline,
)

_CONFIG_HEADER = """\
# egolearn pipeline configuration
# 'auto' picks the documented default (ego_walk_cap, batch_size).
"""

# subcommand name -> pipeline stage
_STAGE_COMMANDS = {
    "walks": "walks",
    "train-global": "glo",
    "train-local": "loc",
    "features": "features",
    "train-clf": "train",
    "evaluate": "eval",
}


def _add_config_options(parser):
    parser.add_argument("--config", help="pipeline config file (key = value)")
    parser.add_argument("--data", help="dataset directory override")
    parser.add_argument("--kind", choices=DATASET_KINDS, help="dataset kind override")
    parser.add_argument("--out", help="artifact directory override")
    parser.add_argument("--seed", type=int, help="seed override")
    parser.add_argument(
        "--deterministic", action="store_true", default=None,
        help="force single-threaded, fully reproducible training",
    )
    parser.add_argument(
        "--workers", type=int,
        help="thread count override; values above 1 disable determinism",
    )


def _resolve_config(args):
    cfg = load_config(args.config) if args.config else PipelineConfig()
    updates = {}
    if args.data is not None:
        updates["data_dir"] = args.data
    if args.kind is not None:
        updates["kind"] = args.kind
    if args.out is not None:
        updates["out_dir"] = args.out
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.workers is not None:
        updates["workers"] = args.workers
        updates["deterministic"] = args.workers <= 1
    if args.deterministic:
        updates["deterministic"] = True
    return dataclasses.replace(cfg, **updates) if updates else cfg


def build_parser():
    parser = argparse.ArgumentParser(
        prog="egolearn",
        description="Ego-network embeddings and circle classification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_stats = sub.add_parser("stats", help="print dataset summary counts")
    p_stats.add_argument("--data", required=True)
    p_stats.add_argument("--kind", choices=DATASET_KINDS, default="facebook")

    p_init = sub.add_parser("init-config", help="write a default config file")
    p_init.add_argument("--out", default="egolearn.cfg")

    p_pipe = sub.add_parser("pipeline", help="run pipeline stages")
    _add_config_options(p_pipe)
    p_pipe.add_argument("--stage", choices=STAGES + ("all",), default="all")

    for command, stage in _STAGE_COMMANDS.items():
        p = sub.add_parser(command, help=f"run the '{stage}' pipeline stage")
        _add_config_options(p)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "stats":
            stats = dataset_stats(load_ego_dataset(args.data, args.kind))
            print(f"nodes {stats.num_nodes}")
            print(f"edges {stats.num_edges}")
            print(f"egos {stats.num_egos}")
            print(f"circles {stats.num_circles}")
            print(f"features {stats.num_features}")
            return 0

        if args.command == "init-config":
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(_CONFIG_HEADER)
                fh.write(config_text(PipelineConfig()))
            print(f"wrote {args.out}")
            return 0

        cfg = _resolve_config(args)
        stage = args.stage if args.command == "pipeline" else _STAGE_COMMANDS[args.command]
        results = run_pipeline(cfg, stage)
        if "eval" in results and hasattr(results["eval"], "format_table"):
            print(results["eval"].format_table(), end="")
        else:
            for name in results:
                print(f"stage {name}: done")
        return 0
    except EgoLearnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
