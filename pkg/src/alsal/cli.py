"""Command-line entry point for the benchmark and AL-study experiments."""

import argparse
import json
from dataclasses import replace

from .active import ActiveConfig
from .als import AlsConfig
from .alsdl import AlsdlConfig
from .mlp import LossConfig, MlpTrainConfig
from .runner import (ExperimentConfig, SyntheticSpec, aggregate_concentrations,
                     run_al_study, run_benchmark, write_report)


def _add_common(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--dataset", help="path to the sensitivity CSV")
    src.add_argument("--synthetic", metavar="M,N,RANK,NOISE",
                     help="generate a synthetic low-rank matrix instead")
    p.add_argument("--target", choices=["gr", "ifd", "both"], default="both")
    p.add_argument("--concentrations", help="comma-separated list; default: "
                   "all fully-covered concentrations")
    p.add_argument("--seeds", default="0", help="comma-separated integer seeds")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--config", help="JSON config file (overridden by flags)")
    p.add_argument("--als-epochs", type=int)
    p.add_argument("--mlp-epochs", type=int)
    p.add_argument("--embedding-dim", type=int)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="alsal",
        description="Matrix-completion active-learning experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("benchmark", help="10-fold cross-validated model "
                       "comparison (ALS vs ALSDL)")
    _add_common(b)
    b.add_argument("--models", default="als,alsdl")
    b.add_argument("--folds", type=int, default=10)

    a = sub.add_parser("al-study", help="active-learning strategy comparison")
    _add_common(a)
    a.add_argument("--strategy", default="orderly,random,uncertainty,elm",
                   help="comma-separated subset of "
                   "orderly,random,uncertainty,elm")
    a.add_argument("--n-init", type=int)
    a.add_argument("--n-per-query", type=int)
    a.add_argument("--n-max-query", type=int)
    a.add_argument("--elm-inner-epochs", type=int)
    return parser


def _config_from_json(path):
    with open(path, encoding="utf-8") as f:
        raw = json.load(f)
    cfg = ExperimentConfig()
    nested = {
        "als": AlsConfig, "alsdl": None, "active": None, "synthetic": SyntheticSpec,
    }
    for key, value in raw.items():
        if key == "als":
            cfg.als = AlsConfig(**value)
        elif key == "alsdl":
            cfg.alsdl = AlsdlConfig(
                als=AlsConfig(**value.get("als", {})),
                mlp_train=MlpTrainConfig(**value.get("mlp_train", {})),
                loss=LossConfig(**{k: tuple(v) if k == "boundaries" else v
                                   for k, v in value.get("loss", {}).items()}),
                hidden_sizes=tuple(value.get("hidden_sizes", (20, 10, 5))))
        elif key == "active":
            cfg.active = ActiveConfig(**value)
        elif key == "synthetic":
            cfg.synthetic = SyntheticSpec(**value)
        elif hasattr(cfg, key):
            setattr(cfg, key, tuple(value) if isinstance(value, list) else value)
        else:
            raise SystemExit(f"unknown config key {key!r}")
    return cfg


def _csv_list(s, conv=str):
    return tuple(conv(x) for x in s.split(",") if x != "")


def resolve_config(args):
    cfg = _config_from_json(args.config) if args.config else ExperimentConfig()
    if args.dataset:
        cfg.dataset_path = args.dataset
        cfg.synthetic = None
    if args.synthetic:
        m, n, rank, noise = args.synthetic.split(",")
        cfg.synthetic = SyntheticSpec(int(m), int(n), int(rank), float(noise))
        cfg.dataset_path = None
    if args.target:
        cfg.targets = ("gr", "ifd") if args.target == "both" else (args.target,)
    if args.concentrations:
        cfg.concentrations = _csv_list(args.concentrations, float)
    cfg.seeds = _csv_list(args.seeds, int)
    cfg.output_dir = args.out
    if args.als_epochs is not None:
        cfg.als = replace(cfg.als, epochs=args.als_epochs)
        cfg.alsdl = replace(cfg.alsdl,
                            als=replace(cfg.alsdl.als, epochs=args.als_epochs))
    if args.mlp_epochs is not None:
        cfg.alsdl = replace(cfg.alsdl, mlp_train=replace(
            cfg.alsdl.mlp_train, epochs=args.mlp_epochs))
    if args.embedding_dim is not None:
        cfg.als = replace(cfg.als, d=args.embedding_dim)
        cfg.alsdl = replace(cfg.alsdl,
                            als=replace(cfg.alsdl.als, d=args.embedding_dim))

    if args.command == "benchmark":
        cfg.models = _csv_list(args.models)
        cfg.folds = args.folds
    else:
        cfg.strategies = _csv_list(args.strategy)
        updates = {}
        for name in ("n_init", "n_per_query", "n_max_query", "elm_inner_epochs"):
            v = getattr(args, name)
            if v is not None:
                updates[name] = v
        cfg.active = replace(cfg.active, **updates)
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    cfg = resolve_config(args)
    if args.command == "benchmark":
        report = run_benchmark(cfg)
    else:
        report = run_al_study(cfg)
    report = aggregate_concentrations(report)
    out = write_report(report, cfg.output_dir)
    print(f"wrote report to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
