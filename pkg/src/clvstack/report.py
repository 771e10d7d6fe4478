"""Regression metrics and split-based feature importance for tree ensembles."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .exceptions import ClvStackError, EmptyInputError

INDICATORS = ("weight", "gain", "cover", "total_gain", "total_cover")


def _paired(predictions, actuals):
    p = np.asarray(predictions, dtype=np.float64).ravel()
    a = np.asarray(actuals, dtype=np.float64).ravel()
    if p.shape != a.shape:
        raise ClvStackError(f"length mismatch: {p.size} predictions vs {a.size} actuals")
    if p.size == 0:
        raise EmptyInputError("metrics need at least one prediction")
    return p, a


def rmse(predictions, actuals) -> float:
    p, a = _paired(predictions, actuals)
    r = np.abs(p - a)
    # scale first so tiny or huge residuals neither underflow nor overflow when squared
    scale = float(r.max())
    if scale == 0.0 or not math.isfinite(scale):
        return scale
    return scale * math.sqrt(float(np.mean((r / scale) ** 2)))


def mae(predictions, actuals) -> float:
    p, a = _paired(predictions, actuals)
    return float(np.mean(np.abs(p - a)))


@dataclass
class EvalReport:
    rmse: float
    mae: float
    n: int
    residuals: list[float] | None = None

    def to_dict(self) -> dict:
        out = asdict(self)
        if self.residuals is None:
            del out["residuals"]
        return out


def evaluate(predictions, actuals, keep_residuals: bool = False) -> EvalReport:
    p, a = _paired(predictions, actuals)
    return EvalReport(
        rmse=rmse(p, a),
        mae=mae(p, a),
        n=int(p.size),
        residuals=(p - a).tolist() if keep_residuals else None,
    )


@dataclass
class FeatureImportance:
    weight: int = 0
    total_gain: float = 0.0
    total_cover: float = 0.0

    @property
    def gain(self) -> float:
        return self.total_gain / self.weight if self.weight else 0.0

    @property
    def cover(self) -> float:
        return self.total_cover / self.weight if self.weight else 0.0

    def get(self, indicator: str) -> float:
        if indicator not in INDICATORS:
            raise ClvStackError(f"unknown importance indicator {indicator!r}")
        value = getattr(self, indicator)
        return value if indicator == "weight" else float(value)


@dataclass
class ImportanceReport:
    features: dict[str, FeatureImportance] = field(default_factory=dict)

    def to_rows(self) -> list[dict]:
        return [
            {"feature": name, **{ind: imp.get(ind) for ind in INDICATORS}}
            for name, imp in self.features.items()
        ]

    def to_json_dict(self) -> dict:
        return {row.pop("feature"): row for row in self.to_rows()}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=["feature", *INDICATORS], lineterminator="\n")
        writer.writeheader()
        for row in self.to_rows():
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()


def _trees_of(model):
    trees = getattr(model, "estimators_", None)
    if trees is None:
        tree = getattr(model, "tree_", None)
        if tree is None:
            raise ClvStackError(f"{type(model).__name__} is not a fitted tree model")
        return [tree]
    return trees


def compute_importance(model, feature_names) -> ImportanceReport:
    """Aggregate weight, gain and cover over every split node of a tree model.

    Gain is the split's loss reduction and cover the training rows (variance
    trees) or hessian mass (Newton trees) reaching the split; ``gain`` and
    ``cover`` are per-split averages of the totals.
    """
    trees = _trees_of(model)
    names = list(feature_names)
    for tree in trees:
        if tree.n_features != len(names):
            raise ClvStackError(f"{len(names)} feature names given for a model with {tree.n_features} features")
    report = ImportanceReport({name: FeatureImportance() for name in names})
    for tree in trees:
        for f, gain, cover in tree.internal_nodes():
            imp = report.features[names[f]]
            imp.weight += 1
            imp.total_gain += gain
            imp.total_cover += cover
    return report


def rank_features(report: ImportanceReport, indicator: str) -> list[str]:
    """Feature names by descending indicator; ties go to the smaller name."""
    if not report.features:
        raise EmptyInputError("importance report is empty")
    return sorted(report.features, key=lambda name: (-report.features[name].get(indicator), name))
