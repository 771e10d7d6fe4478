"""JSON model documents and learner-spec configuration.

Every model document carries ``format`` and ``kind`` tags. Thread counts are
runtime settings and never stored, so a model's bytes depend only on the data,
the parameters and the seed.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .ensemble import GradientBoostedTrees, RandomForestRegressor
from .exceptions import ClvStackError, ModelFormatError
from .linear import ElasticNet
from .stack import StackingCVRegressor
from .tree import RegressionTree, TreeStructure

FORMAT = "clvstack-model/1"

LEARNER_KINDS = {
    "tree": RegressionTree,
    "forest": RandomForestRegressor,
    "boost": GradientBoostedTrees,
    "elastic_net": ElasticNet,
}
_KIND_OF = {cls: kind for kind, cls in LEARNER_KINDS.items()}
_RUNTIME_PARAMS = {"n_jobs"}


def _params(est) -> dict:
    return {k: v for k, v in est.get_params(deep=False).items() if k not in _RUNTIME_PARAMS}


def learner_from_spec(spec: dict):
    """Build an unfitted estimator from ``{"kind": ..., "params": {...}}``."""
    kind = spec.get("kind")
    if kind not in LEARNER_KINDS:
        raise ClvStackError(f"unknown learner kind {kind!r}; expected one of {sorted(LEARNER_KINDS)}")
    try:
        return LEARNER_KINDS[kind](**spec.get("params", {}))
    except TypeError as exc:
        raise ClvStackError(f"bad parameters for {kind!r} learner: {exc}") from exc


def stack_from_config(config: dict, n_jobs: int = 1, feature_names=None) -> StackingCVRegressor:
    learners = config.get("learners") or []
    names = [spec.get("name") for spec in learners]
    if not learners or any(not isinstance(n, str) or not n for n in names):
        raise ClvStackError("stack config needs a non-empty 'learners' list of named specs")
    stack_cfg = config.get("stack") or {}
    return StackingCVRegressor(
        regressors=[(spec["name"], learner_from_spec(spec)) for spec in learners],
        meta_regressor=ElasticNet(**stack_cfg.get("meta", {})),
        k_folds=stack_cfg.get("k_folds", 5),
        use_features_in_secondary=stack_cfg.get("use_features_in_secondary", True),
        random_state=config.get("seed", 42),
        n_jobs=n_jobs,
        feature_names=feature_names,
    )


def model_to_dict(model) -> dict:
    if isinstance(model, StackingCVRegressor):
        return {
            "format": FORMAT,
            "kind": "stack",
            "params": {
                "k_folds": model.k_folds,
                "use_features_in_secondary": model.use_features_in_secondary,
                "random_state": model.random_state,
            },
            "n_features": model.n_features_in_,
            "meta_feature_names": list(model.meta_feature_names_),
            "base_models": [
                {"name": name, "model": model_to_dict(fitted)}
                for (name, _), fitted in zip(model.regressors, model.regressors_)
            ],
            "meta": model_to_dict(model.meta_regressor_),
        }
    kind = _KIND_OF.get(type(model))
    if kind is None:
        raise ClvStackError(f"cannot serialise {type(model).__name__}")
    doc = {"format": FORMAT, "kind": kind, "params": _params(model), "n_features": model.n_features_in_}
    if kind == "tree":
        doc["tree"] = model.tree_.to_dict()
    elif kind == "forest":
        doc["trees"] = [t.to_dict() for t in model.estimators_]
    elif kind == "boost":
        doc["base_score"] = model.base_score_
        doc["trees"] = [t.to_dict() for t in model.estimators_]
    else:
        doc.update(
            coef=model.coef_.tolist(),
            intercept=model.intercept_,
            mean=model.mean_.tolist(),
            scale=model.scale_.tolist(),
            n_iter=model.n_iter_,
        )
    return doc


def model_from_dict(doc: dict):
    if not isinstance(doc, dict) or doc.get("format") != FORMAT:
        raise ModelFormatError(f"not a {FORMAT} document")
    kind = doc.get("kind")
    try:
        d = int(doc["n_features"])
        if kind == "stack":
            bases = [(b["name"], model_from_dict(b["model"])) for b in doc["base_models"]]
            model = StackingCVRegressor(regressors=bases, **doc["params"])
            model.regressors_ = [m for _, m in bases]
            model.meta_order_ = np.argsort(np.array([n for n, _ in bases], dtype=object), kind="stable")
            model.meta_regressor_ = model_from_dict(doc["meta"])
            model.meta_feature_names_ = list(doc["meta_feature_names"])
            model.n_features_in_ = d
            return model
        if kind not in LEARNER_KINDS:
            raise ModelFormatError(f"unknown model kind {kind!r}")
        model = LEARNER_KINDS[kind](**doc["params"])
        model.n_features_in_ = d
        if kind == "tree":
            model.tree_ = TreeStructure.from_dict(doc["tree"], d)
        elif kind == "forest":
            model.estimators_ = [TreeStructure.from_dict(t, d) for t in doc["trees"]]
        elif kind == "boost":
            model.base_score_ = float(doc["base_score"])
            model.estimators_ = [TreeStructure.from_dict(t, d) for t in doc["trees"]]
        else:
            model.coef_ = np.asarray(doc["coef"], dtype=np.float64)
            model.intercept_ = float(doc["intercept"])
            model.mean_ = np.asarray(doc["mean"], dtype=np.float64)
            model.scale_ = np.asarray(doc["scale"], dtype=np.float64)
            model.n_iter_ = int(doc["n_iter"])
        return model
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"malformed {kind} model document: {exc}") from exc


def dumps(doc) -> str:
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def save_model(model, path: str | Path) -> None:
    Path(path).write_text(dumps(model_to_dict(model)), encoding="utf-8")


def load_model(path: str | Path):
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: invalid JSON ({exc})") from exc
    return model_from_dict(doc)
