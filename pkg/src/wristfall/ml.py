"""Machine-learning detectors over the 88-feature vectors.

Three classifiers are implemented here directly (k-nearest neighbours, random
forest, linear SVM trained by Pegasos-style subgradient descent) so that every
tie-break and random draw is pinned:

* all randomness flows from one integer seed (per-tree generators are spawned
  deterministically from it);
* vote and margin ties always resolve to Fall, like the threshold detector;
* KNN distance ties resolve to the lower training index.

Feature scales are wildly heterogeneous (g vs deg/s), so inputs are
standardized per feature with statistics fitted on development data only;
constant features map to 0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Label
from .errors import (
    DataError,
    IncompleteFeatureVector,
    ModelNotFitted,
    SingleClassTrainingSet,
)
from .features import N_FEATURES, FeatureVector

FEATURE_VIEWS = {
    "acc44": slice(0, 44),
    "gyr44": slice(44, 88),
    "combined88": slice(0, 88),
}

MODEL_KINDS = ("knn", "rf", "svm")

DEFAULT_PARAMS: dict[str, dict] = {
    "knn": {"k": 5},
    "rf": {"n_trees": 100, "max_depth": 16, "mtry": None, "min_leaf": 1},
    "svm": {"lam": 1e-3, "epochs": 50},
}

CONSTANT_STD = 1e-9

MODEL_FORMAT = "wristfall-model"
MODEL_VERSION = 1

_FALL, _ADL = 1, 0


@dataclass
class Standardizer:
    """Per-feature (x - mean) / std, fitted on development data only."""

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        return cls(mean=X.mean(axis=0), std=X.std(axis=0))

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        out = np.zeros_like(X, dtype=float)
        live = self.std >= CONSTANT_STD
        out[:, live] = (X[:, live] - self.mean[live]) / self.std[live]
        return out

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(mean=np.array(d["mean"], dtype=float), std=np.array(d["std"], dtype=float))


def _majority(y: np.ndarray) -> int:
    return _FALL if 2 * int(y.sum()) >= y.shape[0] else _ADL


class KNNClassifier:
    def __init__(self, k: int = 5):
        self.k = k
        self._X = None
        self._y = None

    def fit(self, X: np.ndarray, y: np.ndarray, seed: int) -> None:
        self._X = np.asarray(X, dtype=float)
        self._y = np.asarray(y, dtype=int)

    def predict_one(self, x: np.ndarray) -> tuple[int, float]:
        d2 = np.sum((self._X - x) ** 2, axis=1)
        # lexsort: primary key distance, secondary key training index
        order = np.lexsort((np.arange(d2.shape[0]), d2))
        k = min(self.k, d2.shape[0])
        fall_votes = int(self._y[order[:k]].sum())
        label = _FALL if 2 * fall_votes >= k else _ADL
        return label, fall_votes / k

    def to_dict(self) -> dict:
        return {"k": self.k, "X": self._X.tolist(), "y": self._y.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "KNNClassifier":
        obj = cls(k=int(d["k"]))
        obj._X = np.array(d["X"], dtype=float)
        obj._y = np.array(d["y"], dtype=int)
        return obj


def _grow_tree(X, y, rng, depth, max_depth, mtry, min_leaf):
    n = y.shape[0]
    n_fall = int(y.sum())
    if depth >= max_depth or n < 2 * min_leaf or n_fall == 0 or n_fall == n:
        return {"leaf": _majority(y)}

    n_feats = X.shape[1]
    feats = rng.choice(n_feats, size=min(mtry, n_feats), replace=False)
    best = None  # (weighted gini, feature, threshold); first feature wins ties
    for f in feats:
        xf = X[:, f]
        order = np.argsort(xf, kind="stable")
        xs = xf[order]
        ys = y[order]
        pos = np.arange(n - 1)
        valid = xs[pos] < xs[pos + 1]
        if min_leaf > 1:
            valid &= (pos + 1 >= min_leaf) & (n - pos - 1 >= min_leaf)
        if not valid.any():
            continue
        nl = (pos + 1).astype(float)
        nr = n - nl
        fl = np.cumsum(ys)[pos].astype(float)
        fr = n_fall - fl
        gini_l = 1.0 - (fl / nl) ** 2 - ((nl - fl) / nl) ** 2
        gini_r = 1.0 - (fr / nr) ** 2 - ((nr - fr) / nr) ** 2
        weighted = (nl * gini_l + nr * gini_r) / n
        weighted[~valid] = np.inf
        j = int(np.argmin(weighted))
        if best is None or weighted[j] < best[0]:
            best = (float(weighted[j]), int(f), 0.5 * (float(xs[j]) + float(xs[j + 1])))

    if best is None:
        return {"leaf": _majority(y)}
    _, f, thr = best
    mask = X[:, f] <= thr
    if not mask.any() or mask.all():  # midpoint rounded onto a sample value
        return {"leaf": _majority(y)}
    return {
        "f": f,
        "thr": thr,
        "l": _grow_tree(X[mask], y[mask], rng, depth + 1, max_depth, mtry, min_leaf),
        "r": _grow_tree(X[~mask], y[~mask], rng, depth + 1, max_depth, mtry, min_leaf),
    }


def _tree_predict(node: dict, x: np.ndarray) -> int:
    while "leaf" not in node:
        node = node["l"] if x[node["f"]] <= node["thr"] else node["r"]
    return node["leaf"]


class RandomForestClassifier:
    def __init__(self, n_trees: int = 100, max_depth: int = 16, mtry: int | None = None, min_leaf: int = 1):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.mtry = mtry
        self.min_leaf = min_leaf
        self.trees: list[dict] = []

    def fit(self, X: np.ndarray, y: np.ndarray, seed: int) -> None:
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        n = y.shape[0]
        mtry = self.mtry if self.mtry is not None else max(1, int(math.isqrt(X.shape[1])))
        self.trees = []
        for child_seq in np.random.SeedSequence(seed).spawn(self.n_trees):
            rng = np.random.default_rng(child_seq)
            idx = rng.integers(0, n, size=n)
            self.trees.append(_grow_tree(X[idx], y[idx], rng, 0, self.max_depth, mtry, self.min_leaf))

    def predict_one(self, x: np.ndarray) -> tuple[int, float]:
        fall_votes = sum(_tree_predict(tree, x) for tree in self.trees)
        label = _FALL if 2 * fall_votes >= len(self.trees) else _ADL
        return label, fall_votes / len(self.trees)

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "mtry": self.mtry,
            "min_leaf": self.min_leaf,
            "trees": self.trees,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RandomForestClassifier":
        obj = cls(
            n_trees=int(d["n_trees"]),
            max_depth=int(d["max_depth"]),
            mtry=d["mtry"],
            min_leaf=int(d["min_leaf"]),
        )
        obj.trees = d["trees"]
        return obj


class LinearSVM:
    """L2-regularized hinge loss, epoch-based subgradient descent, lr = 1/(lam*t).

    Two stabilizers over the textbook update: the bias is folded into the
    regularized weights as a constant feature (an unregularized bias at this
    learning-rate schedule takes a 1/lam jump on the first step and never
    recovers), and the returned weights are the average over the final epoch
    rather than the noisy last iterate.
    """

    def __init__(self, lam: float = 1e-3, epochs: int = 50):
        self.lam = lam
        self.epochs = epochs
        self.w = None
        self.b = 0.0

    def fit(self, X: np.ndarray, y: np.ndarray, seed: int) -> None:
        X = np.asarray(X, dtype=float)
        y_pm = np.where(np.asarray(y, dtype=int) == _FALL, 1.0, -1.0)
        n, d = X.shape
        Xa = np.hstack([X, np.ones((n, 1))])
        rng = np.random.default_rng(seed)
        w = np.zeros(d + 1)
        tail = np.zeros(d + 1)
        t = 0
        for epoch in range(self.epochs):
            for i in rng.permutation(n):
                t += 1
                eta = 1.0 / (self.lam * t)
                margin = y_pm[i] * (Xa[i] @ w)
                w *= 1.0 - eta * self.lam
                if margin < 1.0:
                    w += eta * y_pm[i] * Xa[i]
                if epoch == self.epochs - 1:
                    tail += w
        w = tail / n
        self.w = w[:-1]
        self.b = float(w[-1])

    def predict_one(self, x: np.ndarray) -> tuple[int, float]:
        score = float(x @ self.w + self.b)
        return (_FALL if score >= 0.0 else _ADL), score

    def to_dict(self) -> dict:
        return {"lam": self.lam, "epochs": self.epochs, "w": self.w.tolist(), "b": self.b}

    @classmethod
    def from_dict(cls, d: dict) -> "LinearSVM":
        obj = cls(lam=float(d["lam"]), epochs=int(d["epochs"]))
        obj.w = np.array(d["w"], dtype=float)
        obj.b = float(d["b"])
        return obj


_CLASSIFIERS = {"knn": KNNClassifier, "rf": RandomForestClassifier, "svm": LinearSVM}


@dataclass
class ClassifierModel:
    kind: str
    feature_view: str
    params: dict
    standardizer: Standardizer | None = None
    classifier: object = None
    seed: int = 0

    @property
    def fitted(self) -> bool:
        return self.standardizer is not None and self.classifier is not None

    def describe(self) -> str:
        return f"{self.kind}({self.feature_view})"


def _feature_matrix(feature_vectors: Sequence[FeatureVector]) -> tuple[np.ndarray, np.ndarray]:
    rows = []
    for fv in feature_vectors:
        v = np.asarray(fv.values, dtype=float)
        if v.shape != (N_FEATURES,) or not np.all(np.isfinite(v)):
            raise IncompleteFeatureVector(f"window {fv.window_ref}: expected {N_FEATURES} finite values")
        rows.append(v)
    X = np.vstack(rows)
    y = np.array([_FALL if fv.label is Label.FALL else _ADL for fv in feature_vectors], dtype=int)
    return X, y


def train(
    kind: str,
    feature_view: str,
    dev_features: Sequence[FeatureVector],
    seed: int,
    **params,
) -> ClassifierModel:
    """Fit one classifier on development feature vectors."""
    if kind not in _CLASSIFIERS:
        raise DataError(f"unknown classifier kind {kind!r}; expected one of {MODEL_KINDS}")
    if feature_view not in FEATURE_VIEWS:
        raise DataError(f"unknown feature view {feature_view!r}; expected one of {tuple(FEATURE_VIEWS)}")
    merged = {**DEFAULT_PARAMS[kind], **params}
    unknown = set(params) - set(DEFAULT_PARAMS[kind])
    if unknown:
        raise DataError(f"unknown {kind} hyperparameters: {sorted(unknown)}")

    X, y = _feature_matrix(dev_features)
    if len(set(y.tolist())) < 2:
        raise SingleClassTrainingSet("training set must contain both falls and ADLs")
    X = X[:, FEATURE_VIEWS[feature_view]]
    standardizer = Standardizer.fit(X)
    Xs = standardizer.transform(X)

    classifier = _CLASSIFIERS[kind](**merged)
    classifier.fit(Xs, y, seed)
    return ClassifierModel(
        kind=kind,
        feature_view=feature_view,
        params=merged,
        standardizer=standardizer,
        classifier=classifier,
        seed=seed,
    )


def predict(model: ClassifierModel, features: FeatureVector) -> tuple[Label, float]:
    """Label plus score: vote fraction for knn/rf, signed margin for svm."""
    label_int, score = predict_values(model, np.asarray(features.values, dtype=float))
    return (Label.FALL if label_int == _FALL else Label.ADL), score


def predict_values(model: ClassifierModel, values: np.ndarray) -> tuple[int, float]:
    if not model.fitted:
        raise ModelNotFitted(f"{model.kind} model has no fitted state")
    if values.shape != (N_FEATURES,) or not np.all(np.isfinite(values)):
        raise IncompleteFeatureVector(f"expected {N_FEATURES} finite values, got shape {values.shape}")
    x = model.standardizer.transform(values[FEATURE_VIEWS[model.feature_view]])[0]
    return model.classifier.predict_one(x)


def save_model(model: ClassifierModel, path) -> None:
    if not model.fitted:
        raise ModelNotFitted("refusing to save an unfitted model")
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kind": model.kind,
        "feature_view": model.feature_view,
        "params": model.params,
        "seed": model.seed,
        "standardizer": model.standardizer.to_dict(),
        "state": model.classifier.to_dict(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path) -> ClassifierModel:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != MODEL_FORMAT:
        raise DataError(f"{path}: not a {MODEL_FORMAT} file")
    if doc.get("version") != MODEL_VERSION:
        raise DataError(f"{path}: unsupported model version {doc.get('version')}")
    kind = doc["kind"]
    if kind not in _CLASSIFIERS:
        raise DataError(f"{path}: unknown classifier kind {kind!r}")
    return ClassifierModel(
        kind=kind,
        feature_view=doc["feature_view"],
        params=doc["params"],
        standardizer=Standardizer.from_dict(doc["standardizer"]),
        classifier=_CLASSIFIERS[kind].from_dict(doc["state"]),
        seed=int(doc.get("seed", 0)),
    )
