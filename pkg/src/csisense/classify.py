"""k-nearest-neighbour and Gaussian naive Bayes classifiers over feature vectors."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

STD_FLOOR = 1e-12
VAR_FLOOR = 1e-9
MODEL_MAGIC = "CSIMODEL/1"


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Feature matrix with one label, subject id and attribute map per row."""

    X: np.ndarray
    labels: Tuple[str, ...]
    subjects: Tuple[str, ...]
    attributes: Tuple[Dict[str, str], ...] = ()
    layout: Tuple[str, ...] = ()
    ids: Tuple[str, ...] = ()

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2:
            X = X.reshape(len(self.labels), -1)
        n = X.shape[0]
        attrs = tuple(self.attributes) if self.attributes else tuple({} for _ in range(n))
        ids = tuple(self.ids) if self.ids else tuple(str(i) for i in range(n))
        layout = tuple(self.layout) if self.layout else tuple(f"f{i}" for i in range(X.shape[1]))
        if not (len(self.labels) == len(self.subjects) == len(attrs) == len(ids) == n):
            raise ValueError("per-sample metadata lengths differ from the number of rows")
        if len(layout) != X.shape[1]:
            raise ValueError("layout length differs from feature dimension")
        if not np.all(np.isfinite(X)):
            raise ValueError("features must be finite")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "labels", tuple(map(str, self.labels)))
        object.__setattr__(self, "subjects", tuple(map(str, self.subjects)))
        object.__setattr__(self, "attributes", attrs)
        object.__setattr__(self, "layout", layout)
        object.__setattr__(self, "ids", ids)

    def __len__(self):
        return self.X.shape[0]

    @property
    def classes(self) -> List[str]:
        return sorted(set(self.labels))

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx, dtype=int).reshape(-1)
        pick = lambda seq: tuple(seq[i] for i in idx)
        return LabeledDataset(self.X[idx], pick(self.labels), pick(self.subjects),
                              pick(self.attributes), self.layout, pick(self.ids))

    def with_labels(self, labels: Sequence[str]) -> "LabeledDataset":
        return LabeledDataset(self.X, tuple(labels), self.subjects, self.attributes, self.layout, self.ids)


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str = "knn"
    k: int = 5

    def __post_init__(self):
        if self.kind not in ("knn", "naive_bayes"):
            raise ValueError(f"unknown classifier kind {self.kind!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass(frozen=True, eq=False)
class TrainedModel:
    kind: str
    layout: Tuple[str, ...]
    mean: np.ndarray
    scale: np.ndarray
    classes: Tuple[str, ...]
    # knn
    k: int = 0
    train_z: Optional[np.ndarray] = None
    train_labels: Optional[np.ndarray] = None  # class indices
    # naive bayes
    class_means: Optional[np.ndarray] = None
    class_vars: Optional[np.ndarray] = None
    log_priors: Optional[np.ndarray] = None

    def standardize(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != len(self.layout):
            raise ValueError(f"feature dimension {X.shape[1]} does not match model layout ({len(self.layout)})")
        return (X - self.mean) / self.scale


def _check_layout(model: TrainedModel, layout) -> None:
    if layout is not None and tuple(layout) != model.layout:
        raise ValueError("feature layout does not match the model's training layout")


def _standardization(X: np.ndarray):
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    return mean, np.maximum(scale, STD_FLOOR)


def fit_knn(train: LabeledDataset, k: int = 5) -> TrainedModel:
    if len(train) == 0:
        raise ValueError("empty training set")
    if not 1 <= k <= len(train):
        raise ValueError(f"k={k} must lie in [1, {len(train)}]")
    mean, scale = _standardization(train.X)
    classes = tuple(train.classes)
    lookup = {c: i for i, c in enumerate(classes)}
    return TrainedModel("knn", train.layout, mean, scale, classes, k=k,
                        train_z=(train.X - mean) / scale,
                        train_labels=np.array([lookup[l] for l in train.labels]))


def _knn_vote(dist_row: np.ndarray, labels: np.ndarray, k: int, n_classes: int) -> int:
    # stable sort: equal distances keep training order
    nearest = np.argsort(dist_row, kind="stable")[:k]
    votes = np.bincount(labels[nearest], minlength=n_classes)
    top = np.flatnonzero(votes == votes.max())
    if top.size == 1:
        return int(top[0])
    # vote tie: the tied class owning the closest neighbour wins
    for i in nearest:
        if labels[i] in top:
            return int(labels[i])
    raise AssertionError("unreachable")


def _pairwise_sq_dist(Q: np.ndarray, T: np.ndarray) -> np.ndarray:
    d = (Q * Q).sum(1)[:, None] + (T * T).sum(1)[None, :] - 2.0 * Q @ T.T
    return np.maximum(d, 0.0)


def predict_knn_many(model: TrainedModel, X, layout=None, exclude_self: bool = False) -> List[str]:
    """Predict a batch of rows.

    ``exclude_self`` drops training row i when classifying query row i, which
    gives leave-one-out predictions when ``X`` is the training matrix.
    """
    _check_layout(model, layout)
    Q = model.standardize(X)
    out = []
    for start in range(0, Q.shape[0], 512):
        block = Q[start:start + 512]
        # exact distances for the tie rules; the expanded form loses ulps
        d = np.sqrt(((block[:, None, :] - model.train_z[None, :, :]) ** 2).sum(-1)) \
            if block.shape[1] * model.train_z.shape[0] * block.shape[0] <= 4_000_000 \
            else np.sqrt(_pairwise_sq_dist(block, model.train_z))
        if exclude_self:
            rows = np.arange(block.shape[0])
            d[rows, start + rows] = np.inf
        for row in d:
            out.append(model.classes[_knn_vote(row, model.train_labels, model.k, len(model.classes))])
    return out


def predict_knn(model: TrainedModel, features, layout=None) -> str:
    return predict_knn_many(model, np.asarray(features, dtype=float).reshape(1, -1), layout)[0]


def fit_nb(train: LabeledDataset) -> TrainedModel:
    if len(train) == 0:
        raise ValueError("empty training set")
    mean, scale = _standardization(train.X)
    Z = (train.X - mean) / scale
    classes = tuple(train.classes)
    labels = np.array(train.labels)
    means, variances, priors = [], [], []
    for c in classes:
        Zc = Z[labels == c]
        means.append(Zc.mean(axis=0))
        variances.append(np.maximum(Zc.var(axis=0), VAR_FLOOR))
        priors.append(Zc.shape[0] / Z.shape[0])
    return TrainedModel("naive_bayes", train.layout, mean, scale, classes,
                        class_means=np.array(means), class_vars=np.array(variances),
                        log_priors=np.log(np.array(priors)))


def nb_log_posterior(model: TrainedModel, X) -> np.ndarray:
    """Unnormalised log posterior, shape (n_queries, n_classes)."""
    Z = model.standardize(X)
    var = model.class_vars
    ll = -0.5 * (np.log(2 * np.pi * var)[None, :, :]
                 + (Z[:, None, :] - model.class_means[None, :, :]) ** 2 / var[None, :, :]).sum(-1)
    return ll + model.log_priors[None, :]


def predict_nb_many(model: TrainedModel, X, layout=None) -> List[str]:
    _check_layout(model, layout)
    # argmax returns the first maximum, so exact ties go to the earliest sorted class
    return [model.classes[i] for i in np.argmax(nb_log_posterior(model, X), axis=1)]


def predict_nb(model: TrainedModel, features, layout=None) -> str:
    return predict_nb_many(model, np.asarray(features, dtype=float).reshape(1, -1), layout)[0]


def fit(spec: ClassifierSpec, train: LabeledDataset) -> TrainedModel:
    if spec.kind == "knn":
        return fit_knn(train, spec.k)
    return fit_nb(train)


def predict_many(model: TrainedModel, X, layout=None) -> List[str]:
    if model.kind == "knn":
        return predict_knn_many(model, X, layout)
    return predict_nb_many(model, X, layout)


# -- persistence ----------------------------------------------------------------

def _row(name: str, values) -> str:
    return name + "\t" + "\t".join(repr(float(v)) for v in np.ravel(values))


def format_model(model: TrainedModel) -> str:
    lines = [f"{MODEL_MAGIC}\tkind={model.kind}\tk={model.k}\tdim={len(model.layout)}\tclasses={len(model.classes)}",
             "layout\t" + "\t".join(model.layout),
             "classes\t" + "\t".join(model.classes),
             _row("mean", model.mean),
             _row("scale", model.scale)]
    if model.kind == "knn":
        for z, lab in zip(model.train_z, model.train_labels):
            lines.append(_row(f"train:{model.classes[lab]}", z))
    else:
        for i, c in enumerate(model.classes):
            lines.append(_row(f"prior:{c}", [model.log_priors[i]]))
            lines.append(_row(f"mu:{c}", model.class_means[i]))
            lines.append(_row(f"var:{c}", model.class_vars[i]))
    return "\n".join(lines) + "\n"


def parse_model(text: str) -> TrainedModel:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(MODEL_MAGIC):
        raise ValueError(f"missing {MODEL_MAGIC} header")
    head = dict(tok.split("=", 1) for tok in lines[0].split("\t")[1:])
    kind, k = head["kind"], int(head["k"])
    rows = {}
    ordered = []
    for line in lines[1:]:
        name, *vals = line.split("\t")
        rows[name] = vals
        ordered.append((name, vals))
    layout = tuple(rows["layout"])
    classes = tuple(rows["classes"])
    as_arr = lambda vals: np.array([float(v) for v in vals])
    mean, scale = as_arr(rows["mean"]), as_arr(rows["scale"])
    if kind == "knn":
        lookup = {c: i for i, c in enumerate(classes)}
        train = [(lookup[n.split(":", 1)[1]], as_arr(v)) for n, v in ordered if n.startswith("train:")]
        return TrainedModel(kind, layout, mean, scale, classes, k=k,
                            train_z=np.array([z for _, z in train]),
                            train_labels=np.array([l for l, _ in train]))
    return TrainedModel(kind, layout, mean, scale, classes,
                        class_means=np.array([as_arr(rows[f"mu:{c}"]) for c in classes]),
                        class_vars=np.array([as_arr(rows[f"var:{c}"]) for c in classes]),
                        log_priors=np.array([as_arr(rows[f"prior:{c}"])[0] for c in classes]))
