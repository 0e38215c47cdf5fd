"""Command-line entry points: run, synth, rank, rank-diff.

Exit codes: 0 on success, 1 on a configuration error (bad arguments or a
bad config file), 2 on a runtime error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import sys
from dataclasses import replace
from pathlib import Path

from .bench import (
    ConfigError,
    emit_report,
    load_run_config,
    rank_diff,
    run_experiment,
    write_rank_diff_csv,
)
from .data import load_csv, normalize_minmax
from .ranking import (
    attribute_scores,
    compute_centroid,
    export_rank,
    fit_reducer,
    partition_labels,
)
from .synth import SynthSpec, generate, save_synth


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="outcentr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute an experiment matrix from a config file")
    run.add_argument("--config", required=True, help="run config file (INI grammar)")
    run.add_argument("--seed", type=int, action="append", help="override config seeds (repeatable)")
    run.add_argument("--t-fraction", type=float, help="override the selection fraction")
    run.add_argument("--transductive", action="store_true", help="threshold on the scored set itself")
    run.add_argument("--label-budget", type=float, help="fraction of labels used per class")
    run.add_argument("--save-model", metavar="DIR", help="save fitted reducer models here")
    run.add_argument("--out", help="override the output directory")
    run.set_defaults(handler=_cmd_run)

    synth = sub.add_parser("synth", help="generate a synthetic dataset from a spec file")
    synth.add_argument("--spec", required=True, help="spec file with a [synth] section")
    synth.add_argument("--out", required=True, help="output directory")
    synth.set_defaults(handler=_cmd_synth)

    rank = sub.add_parser("rank", help="rank attributes of a labeled CSV and export")
    rank.add_argument("--data", required=True, help="input CSV")
    rank.add_argument("--label", required=True, help="binary label column name")
    rank.add_argument("--out", required=True, help="rank export CSV path")
    rank.add_argument("--t-fraction", type=float, default=0.10)
    rank.add_argument("--seed", type=int, default=0)
    rank.add_argument("--label-budget", type=float, default=1.0)
    rank.add_argument("--positive-token", default="1")
    rank.add_argument("--negative-token", default="0")
    rank.add_argument("--scores-out", help="also write per-class attribute-score report here")
    rank.add_argument(
        "--absolute-deviation",
        action="store_true",
        help="report mean absolute instead of signed deviations",
    )
    rank.set_defaults(handler=_cmd_rank)

    diff = sub.add_parser("rank-diff", help="compare two rank exports")
    diff.add_argument("rank_a", help="first rank export CSV")
    diff.add_argument("rank_b", help="second rank export CSV")
    diff.add_argument("--out", help="write the full diff as CSV")
    diff.add_argument("--top", type=int, default=10, help="rows to print")
    diff.set_defaults(handler=_cmd_rank_diff)
    return parser


def _cmd_run(args) -> int:
    cfg = load_run_config(args.config)
    updates = {}
    if args.seed:
        updates["seeds"] = tuple(args.seed)
    if args.t_fraction is not None:
        updates["t_fraction"] = args.t_fraction
    if args.transductive:
        updates["transductive"] = True
    if args.label_budget is not None:
        updates["label_budget"] = args.label_budget
    if args.save_model:
        updates["save_model_dir"] = args.save_model
    if args.out:
        updates["output_dir"] = args.out
    if updates:
        cfg = replace(cfg, **updates)
    report = run_experiment(cfg)
    paths = emit_report(report, cfg.output_dir)
    for path in paths:
        print(path)
    return 0


def _cmd_synth(args) -> int:
    spec = _load_synth_spec(args.spec)
    dataset, informative = generate(spec)
    for path in save_synth(dataset, informative, args.out):
        print(path)
    return 0


def _load_synth_spec(path) -> SynthSpec:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"no such spec file: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not parser.has_section("synth"):
        raise ConfigError("spec file needs a [synth] section")
    section = parser["synth"]
    known = {"n", "m", "contamination", "n_informative", "separation", "seed"}
    unknown = set(section) - known
    if unknown:
        raise ConfigError(f"unknown keys in [synth]: {sorted(unknown)}")
    try:
        return SynthSpec(
            n=section.getint("n"),
            m=section.getint("m"),
            contamination=section.getfloat("contamination"),
            n_informative=section.getint("n_informative", fallback=None),
            separation=section.getfloat("separation", fallback=4.0),
            seed=section.getint("seed", fallback=0),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad synth spec: {exc}") from exc


def _cmd_rank(args) -> int:
    data = load_csv(
        args.data,
        label_column=args.label,
        positive_token=args.positive_token,
        negative_token=args.negative_token,
    )
    data = normalize_minmax(data)
    rank = fit_reducer(
        data, ratio=args.label_budget, t_fraction=args.t_fraction, seed=args.seed
    )
    export_rank(rank, args.out)
    print(args.out)
    if args.scores_out:
        _write_attribute_scores(data, args.scores_out, args.absolute_deviation)
        print(args.scores_out)
    return 0


def _write_attribute_scores(data, path, absolute: bool) -> None:
    part = partition_labels(data)
    all_rows = range(data.n)
    vs_outlier = attribute_scores(
        data, all_rows, compute_centroid(data, part.outlier_rows, "outlier"), absolute
    )
    vs_inlier = attribute_scores(
        data, all_rows, compute_centroid(data, part.inlier_rows, "inlier"), absolute
    )
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["attribute", "score_vs_outlier_centroid", "score_vs_inlier_centroid"])
        for name, a, b in zip(data.attribute_names, vs_outlier.values, vs_inlier.values):
            writer.writerow([name, repr(float(a)), repr(float(b))])


def _cmd_rank_diff(args) -> int:
    diff = rank_diff(args.rank_a, args.rank_b)
    print(f"{'attribute':<24} {'rank_a':>6} {'rank_b':>6} {'delta':>6}")
    for entry in diff.entries[: args.top]:
        rank_a = "-" if entry.rank_a is None else entry.rank_a
        rank_b = "-" if entry.rank_b is None else entry.rank_b
        delta = "-" if entry.rank_delta is None else f"{entry.rank_delta:+d}"
        print(f"{entry.attribute:<24} {rank_a:>6} {rank_b:>6} {delta:>6}")
    if args.out:
        write_rank_diff_csv(diff, args.out)
        print(args.out)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except SystemExit:
        raise
    except Exception as exc:  # noqa: BLE001 - CLI boundary maps anything to exit 2
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
