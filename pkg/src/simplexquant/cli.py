"""Command-line entry point: ``simplexquant {quantify,evaluate,synth,probs-export}``.

Exit codes: 0 success, 1 usage or config error, 2 data error, 3 solver failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import config as cfgmod
from . import io as qio
from ._backend import BACKEND
from .classifier import fit, out_of_fold_proba, predict_proba
from .core import ProbSource
from .errors import ConfigError, DataError, QuantificationError
from .evaluation import run_suite
from .quantifiers import Quantifier
from .synth import generate


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _read_unlabeled(path, training):
    data = qio.read_dataset(path, training.class_names, n_features=None)
    if data.n_features != training.n_features:
        raise DataError(
            f"unlabeled file has {data.n_features} features, training has {training.n_features}", path
        )
    if data.labeled:
        _warn(f"{path}: 'label' column ignored for quantification")
        data = data.without_labels()
    return data


def cmd_quantify(args) -> int:
    r = cfgmod.load(args.config, "quantify", {"seed": args.seed})
    if args.method:
        r["method"] = args.method
    if args.loss:
        r["loss"] = cfgmod.parse_loss(args.loss)
    qcfg = cfgmod.method_config(r, r["method"], r["loss"])
    training = qio.read_dataset(args.train)
    unlabeled = _read_unlabeled(args.unlabeled, training)

    train_probs = unl_probs = None
    if (args.train_probs is None) != (args.unlabeled_probs is None):
        raise ConfigError("--train-probs and --unlabeled-probs must be given together")
    if args.train_probs is not None:
        train_probs = qio.read_probs(args.train_probs, training.class_names, ProbSource.OUT_OF_FOLD)
        unl_probs = qio.read_probs(args.unlabeled_probs, training.class_names)
    result = Quantifier(qcfg).fit(training, training_probs=train_probs).quantify(unlabeled, unl_probs)

    out = result.to_dict()
    out["class_names"] = list(training.class_names)
    out["config"] = cfgmod.provenance(r)
    out["backend"] = BACKEND
    out["inputs"] = {"train": str(args.train), "unlabeled": str(args.unlabeled)}
    text = _dump(out)
    sys.stdout.write(text)
    if args.out:
        (_out_dir(args) / "result.json").write_text(text, encoding="utf-8")
    return 0


def cmd_evaluate(args) -> int:
    r = cfgmod.load(args.config, "evaluate", {"seed": args.seed, "jobs": args.jobs})
    methods = [cfgmod.method_config(r, m) for m in r["methods"]]
    scenarios = cfgmod.scenario_spec(r)
    training = qio.read_dataset(args.train)
    pool = qio.read_dataset(args.pool, training.class_names, n_features=training.n_features)
    report = run_suite(
        training,
        pool,
        scenarios,
        methods,
        r["test_size"],
        regularization=r["regularization"],
        cv=cfgmod.cv_config(r),
        jobs=r["jobs"],
    )
    # worker count does not change results, so it stays out of the provenance
    report.settings["config"] = {k: v for k, v in cfgmod.provenance(r).items() if k != "jobs"}
    report.settings["inputs"] = {"train": str(args.train), "pool": str(args.pool)}
    out = _out_dir(args)
    (out / "report.json").write_text(report.to_json(), encoding="utf-8")
    (out / "report.csv").write_text(report.to_csv(), encoding="utf-8")
    for label, agg in report.aggregates.items():
        mm = "-" if agg["mean_mad"] is None else f"{agg['mean_mad']:.4f}"
        acc = "-" if agg["mean_accuracy"] is None else f"{agg['mean_accuracy']:.4f}"
        print(f"{label:<28} MAD {mm}  accuracy {acc}  errors {agg['errors']}")
    print(f"{len(report.per_case)} cases written to {out}")
    if report.error_count:
        _warn(f"{report.error_count} per-case method errors recorded in the report")
    return 0


def cmd_synth(args) -> int:
    r = cfgmod.load(args.config, "synth", {"seed": args.seed})
    spec = cfgmod.synth_spec(r)
    training, pool = generate(spec)
    out = _out_dir(args)
    qio.write_dataset(out / "train.csv", training)
    written = ["train.csv"]
    if pool is not None:
        qio.write_dataset(out / "pool.csv", pool)
        written.append("pool.csv")
    (out / "synth.json").write_text(_dump({"config": cfgmod.provenance(r), "files": written}), encoding="utf-8")
    print(f"wrote {', '.join(written)} to {out} (seed {r['seed']})")
    return 0


def cmd_probs_export(args) -> int:
    r = cfgmod.load(args.config, "probs-export", {"seed": args.seed})
    training = qio.read_dataset(args.train)
    oof = out_of_fold_proba(training, cfgmod.cv_config(r), r["regularization"])
    out = _out_dir(args)
    qio.write_probs(out / "train_probs.csv", oof.averaged(), training.class_names)
    written = ["train_probs.csv"]
    if args.unlabeled:
        unlabeled = _read_unlabeled(args.unlabeled, training)
        model = fit(training, r["regularization"])
        qio.write_probs(out / "unlabeled_probs.csv", predict_proba(model, unlabeled), training.class_names)
        written.append("unlabeled_probs.csv")
    (out / "probs.json").write_text(_dump({"config": cfgmod.provenance(r), "files": written}), encoding="utf-8")
    print(f"wrote {', '.join(written)} to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="simplexquant", description="Class-proportion estimation under prior shift.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, out_default):
        p.add_argument("--config", help="INI file with a section per command")
        p.add_argument("--seed", type=int, help="override the section seed")
        p.add_argument("--out", default=out_default, help="output directory")

    p = sub.add_parser("quantify", help="estimate proportions of an unlabeled file")
    p.add_argument("train")
    p.add_argument("unlabeled")
    common(p, None)
    p.add_argument("--method", help="method name, overrides the config")
    p.add_argument("--loss", help="loss override: least_squares, least_absolute_deviation, hellinger")
    p.add_argument("--train-probs", help="out-of-fold posteriors for the training rows (CSV)")
    p.add_argument("--unlabeled-probs", help="posteriors for the unlabeled rows (CSV)")
    p.set_defaults(func=cmd_quantify)

    p = sub.add_parser("evaluate", help="run an evaluation suite")
    p.add_argument("train")
    p.add_argument("pool")
    common(p, ".")
    p.add_argument("--jobs", type=int, help="concurrent cases")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="generate synthetic training and pool files")
    common(p, ".")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("probs-export", help="write out-of-fold posteriors as CSV")
    p.add_argument("train")
    p.add_argument("--unlabeled", help="also write full-model posteriors for this file")
    common(p, ".")
    p.set_defaults(func=cmd_probs_export)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except QuantificationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ImportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
