"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
A plain-text config file (key = value per line) may supply any flag;
command-line flags override the file.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields

from .experiment import (ExperimentConfig, MODES, run_alpha_sweep,
                         run_beta_sweep, run_experiment)
from .synth import write_benchmark

log = logging.getLogger(__name__)


def _parse_config_file(path: str) -> dict:
    out = {}
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {line!r}")
            key, val = (t.strip() for t in line.split("=", 1))
            out[key.replace("-", "_")] = val
    return out


def _parse_seeds(text: str) -> tuple:
    return tuple(int(t) for t in text.split(",") if t.strip())


def _parse_floats(text: str) -> tuple:
    return tuple(float(t) for t in text.split(",") if t.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairac",
        description="Fair attribute completion experiments on graphs with "
                    "missing node attributes.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("dataset", nargs="?", default=None,
                       help="dataset directory with nodes.csv/edges.csv, "
                            "or 'synthetic' (default)")
        p.add_argument("--config", help="plain-text key=value config file")
        p.add_argument("--alpha", type=float)
        p.add_argument("--beta", type=float)
        p.add_argument("--heads", type=int, dest="num_heads")
        p.add_argument("--mode", choices=MODES)
        p.add_argument("--seeds", help="comma-separated, e.g. 0,1,2")
        p.add_argument("--threshold", type=float, dest="accuracy_threshold")
        p.add_argument("--epochs-ac", type=int, dest="epochs_ac")
        p.add_argument("--epochs-gcn", type=int, dest="epochs_gcn")
        p.add_argument("--lt-mode", dest="lt_mode",
                       choices=("uniform_target", "negated_bce"))
        p.add_argument("--sensitive-col", dest="sensitive_column")
        p.add_argument("--label-col", dest="label_column")
        p.add_argument("--out", dest="out_dir")

    p_run = sub.add_parser("run", help="single experiment over the seed list")
    add_common(p_run)

    p_alpha = sub.add_parser("alpha-sweep", help="sweep attribute missing rates")
    add_common(p_alpha)
    p_alpha.add_argument("--alphas", default="0.1,0.3,0.5,0.8")

    p_beta = sub.add_parser("beta-sweep", help="sweep the fairness trade-off weight")
    add_common(p_beta)
    p_beta.add_argument("--betas", default="0,0.2,0.4,0.7,0.8,1.0")

    p_data = sub.add_parser("make-data", help="write the synthetic benchmark files")
    p_data.add_argument("out_dir")
    p_data.add_argument("--seed", type=int, default=7)
    p_data.add_argument("--nodes", type=int, default=403)
    p_data.add_argument("--edges", type=int, default=16570)

    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    values = {}
    if args.config:
        values.update(_parse_config_file(args.config))
    valid = {f.name: f.type for f in fields(ExperimentConfig)}
    # coerce file-sourced strings
    casts = {"alpha": float, "beta": float, "num_heads": int,
             "accuracy_threshold": float, "epochs_ac": int, "epochs_gcn": int,
             "synthetic_seed": int, "seeds": _parse_seeds}
    for k in list(values):
        if k not in valid:
            raise ValueError(f"unknown config key: {k}")
        if k in casts:
            values[k] = casts[k](values[k])
    for key in ("alpha", "beta", "num_heads", "mode", "accuracy_threshold",
                "epochs_ac", "epochs_gcn", "lt_mode", "sensitive_column",
                "label_column", "out_dir"):
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v
    if getattr(args, "seeds", None):
        values["seeds"] = _parse_seeds(args.seeds)
    if getattr(args, "dataset", None):
        values["dataset"] = args.dataset
    return ExperimentConfig(**values)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "make-data":
        spec = write_benchmark(args.out_dir, seed=args.seed,
                               num_nodes=args.nodes, num_edges=args.edges)
        print(f"wrote {spec.node_file} and {spec.edge_file}")
        return 0

    try:
        cfg = config_from_args(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command == "run":
            result = run_experiment(cfg)
            if not result.reports():
                print("all seeds failed", file=sys.stderr)
                return 2
            agg = result.aggregate()
            print(f"{agg['method']}: acc {agg['acc_mean']:.2f}±{agg['acc_std']:.2f}  "
                  f"auc {agg['auc_mean']:.2f}±{agg['auc_std']:.2f}  "
                  f"dSP+dEO {agg['combined_mean']:.2f}±{agg['combined_std']:.2f}")
        elif args.command == "alpha-sweep":
            run_alpha_sweep(cfg, alphas=_parse_floats(args.alphas))
        elif args.command == "beta-sweep":
            run_beta_sweep(cfg, betas=_parse_floats(args.betas))
        print(f"results written to {cfg.out_dir}")
        return 0
    except Exception as exc:
        log.error("run failed: %s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
