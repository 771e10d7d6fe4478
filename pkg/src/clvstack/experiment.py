"""End-to-end comparison of the base learners and the stacked regressor."""
from __future__ import annotations

import csv
import io
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import persist
from .ensemble import forest_config, lightgbm_config, xgboost_config
from .features import FEATURE_NAMES, WindowSpec, build_features, default_cutoff, to_matrix
from .ingest import build_ledger, clean, dataset_stats, parse_transactions
from .linear import ElasticNet
from .report import compute_importance, evaluate, rank_features
from .stack import StackingCVRegressor, derive_seed

log = logging.getLogger(__name__)

TEST_FRACTION = 0.2
TABLE_HEADER = ["method", "rmse", "mae", "n_test", "status"]


def base_learners(seed: int, n_jobs: int = 1) -> dict:
    return {
        "RandomForest": forest_config(random_state=derive_seed(seed, "RandomForest", "model"), n_jobs=n_jobs),
        "XGBoost": xgboost_config(),
        "LightGBM": lightgbm_config(),
        "ElasticNet": ElasticNet(),
    }


def stacked(seed: int, passthrough: bool, n_jobs: int = 1) -> StackingCVRegressor:
    bases = base_learners(seed, n_jobs)
    return StackingCVRegressor(
        regressors=[(name, bases[name]) for name in ("RandomForest", "XGBoost", "ElasticNet")],
        meta_regressor=ElasticNet(),
        k_folds=5,
        use_features_in_secondary=passthrough,
        random_state=seed,
        feature_names=list(FEATURE_NAMES),
    )


def train_test_split(n: int, seed: int, test_fraction: float = TEST_FRACTION):
    order = np.random.default_rng(seed).permutation(n)
    n_test = max(1, int(round(n * test_fraction)))
    return np.sort(order[n_test:]), np.sort(order[:n_test])


@dataclass
class ExperimentResult:
    table: list[dict] = field(default_factory=list)
    importance: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def row(self, method: str) -> dict:
        return next(r for r in self.table if r["method"] == method)

    def table_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=TABLE_HEADER, lineterminator="\n")
        writer.writeheader()
        for r in self.table:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
        return buf.getvalue()

    def importance_csv(self) -> str:
        buf = io.StringIO()
        writer = None
        for model_name, report in self.importance.items():
            for row in report.to_rows():
                row = {"model": model_name, **row}
                if writer is None:
                    writer = csv.DictWriter(buf, fieldnames=list(row), lineterminator="\n")
                    writer.writeheader()
                writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()


def run_experiment(input_path, seed: int = 42, n_jobs: int = 1, out_dir=None, target_horizon_days: int = 90) -> ExperimentResult:
    """Clean, featurise, train every model on 80% of customers, score on 20%.

    When ``out_dir`` is given, writes ``table5.csv``, ``importance.csv``,
    ``experiment.json`` and one model document per method under ``models/``.
    """
    t0 = time.perf_counter()
    records, errors = parse_transactions(input_path)
    transactions, clean_report = clean(records, errors)
    del records
    ledger = build_ledger(transactions)
    stats = dataset_stats(ledger, transactions)
    del transactions
    cutoff = default_cutoff(ledger, target_horizon_days)
    spec = WindowSpec(cutoff, target_horizon_days=target_horizon_days)
    data = to_matrix(build_features(ledger, spec))
    train_rows, test_rows = train_test_split(len(data), seed)
    train, test = data.take(train_rows), data.take(test_rows)
    log.info("features ready: %d customers (%d train / %d test)", len(data), len(train), len(test))

    models = dict(base_learners(seed, n_jobs))
    models["Stacked Regressor"] = stacked(seed, passthrough=True, n_jobs=n_jobs)
    models["Stacked Regressor (no passthrough)"] = stacked(seed, passthrough=False, n_jobs=n_jobs)

    result = ExperimentResult()
    fitted = {}
    for name, model in models.items():
        t = time.perf_counter()
        try:
            model.fit(train.X, train.y)
            rep = evaluate(model.predict(test.X), test.y)
            result.table.append({"method": name, "rmse": rep.rmse, "mae": rep.mae, "n_test": rep.n, "status": "OK"})
            fitted[name] = model
        except Exception as exc:  # recorded in the table; the run continues
            log.exception("model %s failed", name)
            result.table.append({"method": name, "rmse": "", "mae": "", "n_test": len(test), "status": f"error: {exc}"})
        log.info("%s done in %.1fs", name, time.perf_counter() - t)

    for name in ("XGBoost", "LightGBM", "RandomForest"):
        if name in fitted:
            result.importance[name] = compute_importance(fitted[name], FEATURE_NAMES)

    checks = {}
    if "XGBoost" in result.importance:
        rep = result.importance["XGBoost"]
        top_gain = rank_features(rep, "gain")[0]
        top_weight = rank_features(rep, "weight")[0]
        checks["boost_top_feature_by_gain"] = top_gain
        checks["boost_top_feature_by_weight"] = top_weight
        checks["gain_and_weight_top_features_differ"] = top_gain != top_weight
    ok = {r["method"]: r for r in result.table if r["status"] == "OK"}
    if "Stacked Regressor" in ok and "Stacked Regressor (no passthrough)" in ok:
        checks["passthrough_improves_rmse"] = ok["Stacked Regressor"]["rmse"] < ok["Stacked Regressor (no passthrough)"]["rmse"]

    result.metadata = {
        "input": str(input_path),
        "seed": seed,
        "protocol": {
            "split": "random customer split",
            "test_fraction": TEST_FRACTION,
            "cutoff": cutoff.isoformat(),
            "target_horizon_days": target_horizon_days,
            "recent_window_days": spec.recent_window_days,
            "n_train": len(train),
            "n_test": len(test),
        },
        "clean_report": clean_report.to_dict(),
        "dataset_stats": stats.to_dict(),
        "checks": checks,
    }

    if out_dir is not None:
        out = Path(out_dir)
        (out / "models").mkdir(parents=True, exist_ok=True)
        (out / "table5.csv").write_text(result.table_csv(), encoding="utf-8")
        (out / "importance.csv").write_text(result.importance_csv(), encoding="utf-8")
        (out / "experiment.json").write_text(json.dumps(result.metadata, indent=1, sort_keys=True) + "\n", encoding="utf-8")
        for name, model in fitted.items():
            slug = name.lower().replace(" ", "_").replace("(", "").replace(")", "")
            persist.save_model(model, out / "models" / f"{slug}.json")
    log.info("experiment finished in %.1fs", time.perf_counter() - t0)
    return result
