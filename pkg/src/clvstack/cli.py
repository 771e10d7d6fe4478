"""Command-line interface for the CLV stacking pipeline.

Exit codes: 0 success, 1 internal failure, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime
from pathlib import Path

from . import persist
from .clv import clv_from_ledger
from .exceptions import ChurnZeroError, ClvStackError
from .experiment import run_experiment
from .features import FEATURE_NAMES, WindowSpec, build_features, default_cutoff, read_features_csv, to_matrix, write_features_csv
from .ingest import build_ledger, clean, dataset_stats, parse_transactions, write_transactions
from .report import compute_importance, evaluate

log = logging.getLogger("clvstack")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2


class InputError(Exception):
    pass


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"no such file: {path}")
    return p


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")


def _load_ledger(path: str):
    records, errors = parse_transactions(_existing(path))
    transactions, report = clean(records, errors)
    return transactions, report, errors


def cmd_ingest(args) -> int:
    transactions, report, errors = _load_ledger(args.input)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_transactions(transactions, out / "cleaned.csv")
    doc = report.to_dict()
    doc["parse_errors"] = [{"row": e.row, "reason": e.reason} for e in errors[:1000]]
    if transactions:
        doc["dataset_stats"] = dataset_stats(build_ledger(transactions), transactions).to_dict()
    _write_json(out / "clean_report.json", doc)
    log.info("kept %d of %d rows", report.retained, report.input_rows)
    return EXIT_OK


def cmd_featurize(args) -> int:
    transactions, _, _ = _load_ledger(args.input)
    ledger = build_ledger(transactions)
    if len(ledger) == 0:
        raise InputError("no clean transactions in input")
    if args.cutoff:
        try:
            cutoff = datetime.fromisoformat(args.cutoff)
        except ValueError as exc:
            raise InputError(f"--cutoff: {exc}") from exc
    else:
        cutoff = default_cutoff(ledger, args.horizon)
    rows = build_features(ledger, WindowSpec(cutoff, target_horizon_days=args.horizon))
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_features_csv(rows, out)
    log.info("wrote %d feature rows (cutoff %s)", len(rows), cutoff.isoformat())
    return EXIT_OK


def cmd_clv(args) -> int:
    transactions, _, _ = _load_ledger(args.input)
    print(json.dumps(clv_from_ledger(build_ledger(transactions), args.margin).to_dict(), indent=1, sort_keys=True))
    return EXIT_OK


def _read_matrix(path: str):
    return to_matrix(read_features_csv(_existing(path)))


def cmd_train(args) -> int:
    data = _read_matrix(args.features)
    try:
        config = json.loads(_existing(args.config).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{args.config}: invalid JSON ({exc})") from exc
    learners = config.get("learners") or []
    if args.learner:
        matches = [s for s in learners if s.get("name") == args.learner]
        if not matches:
            raise InputError(f"no learner named {args.learner!r} in config")
        model, kind = persist.learner_from_spec(matches[0]), "learner"
    elif "stack" in config:
        model, kind = persist.stack_from_config(config, n_jobs=args.threads, feature_names=list(FEATURE_NAMES)), "stack"
    elif len(learners) == 1:
        model, kind = persist.learner_from_spec(learners[0]), "learner"
    else:
        raise InputError("config must define 'stack', a single learner, or use --learner")
    if "n_jobs" in model.get_params(deep=False):
        model.set_params(n_jobs=args.threads)
    if kind == "learner" and "random_state" in model.get_params(deep=False) and "seed" in config:
        model.set_params(random_state=config["seed"])

    model.fit(data.X, data.y)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    persist.save_model(model, out / "model.json")
    train_eval = evaluate(model.predict(data.X), data.y)
    _write_json(
        out / "training_log.json",
        {"kind": kind, "n_rows": len(data), "features": list(data.feature_names), "train_metrics": train_eval.to_dict()},
    )
    return EXIT_OK


def cmd_evaluate(args) -> int:
    data = _read_matrix(args.features)
    results = []
    for path in args.models:
        model = persist.load_model(_existing(path))
        results.append({"model": str(path), **evaluate(model.predict(data.X), data.y).to_dict()})
    doc = results[0] if len(results) == 1 else {"comparison": results}
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_json(out, doc)
    if len(results) > 1:
        lines = ["method,rmse,mae"] + [f"{r['model']},{r['rmse']!r},{r['mae']!r}" for r in results]
        out.with_suffix(".csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(json.dumps(doc, indent=1, sort_keys=True))
    return EXIT_OK


def cmd_importance(args) -> int:
    model = persist.load_model(_existing(args.model))
    report = compute_importance(model, FEATURE_NAMES)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "importance.csv").write_text(report.to_csv(), encoding="utf-8")
    _write_json(out / "importance.json", report.to_json_dict())
    return EXIT_OK


def cmd_experiment(args) -> int:
    result = run_experiment(_existing(args.input), seed=args.seed, n_jobs=args.threads, out_dir=args.out_dir)
    sys.stdout.write(result.table_csv())
    failed = [r for r in result.table if r["status"] != "OK"]
    return EXIT_INTERNAL if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clvstack", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse and clean a transaction CSV")
    p.add_argument("input")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("featurize", help="build the per-customer feature table")
    p.add_argument("input", help="raw or cleaned transaction CSV")
    p.add_argument("--cutoff", help="ISO timestamp; default: last 90 whole days form the target window")
    p.add_argument("--horizon", type=int, default=90, help="target window length in days")
    p.add_argument("--out", default="features.csv")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("clv", help="aggregate analytic CLV as JSON")
    p.add_argument("input")
    p.add_argument("--margin", type=float, required=True, help="profit margin as a fraction")
    p.set_defaults(func=cmd_clv)

    p = sub.add_parser("train", help="fit a learner or a stack from a JSON config")
    p.add_argument("features")
    p.add_argument("config")
    p.add_argument("--learner", help="train only the named learner from the config")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="RMSE/MAE of saved models on a feature table")
    p.add_argument("models", nargs="+")
    p.add_argument("--features", required=True)
    p.add_argument("--out", default="eval.json")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("importance", help="weight/gain/cover of a saved tree model")
    p.add_argument("model")
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_importance)

    p = sub.add_parser("experiment", help="run the full comparison and write table5.csv")
    p.add_argument("input")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out-dir", default="experiment")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, ClvStackError, ChurnZeroError, OSError) as exc:
        print(f"clvstack {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:
        log.exception("internal failure")
        print(f"clvstack {args.command}: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
