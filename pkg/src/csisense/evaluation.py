"""Evaluation protocols and confusion-matrix reports.

Protocols: stratified k-fold cross-validation, inset (train = test = all),
person-dependent (per-subject split, pooled training set), person-independent
(leave one subject out) and attribute-grouped runs of any of these.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .classify import ClassifierSpec, LabeledDataset, fit, predict_many


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    classes: tuple
    counts: np.ndarray  # [true][predicted]

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.shape != (len(self.classes), len(self.classes)):
            raise ValueError("counts must be square over the class list")
        if np.any(c < 0):
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "counts", c)

    @classmethod
    def from_predictions(cls, classes, truth, predicted) -> "ConfusionMatrix":
        index = {c: i for i, c in enumerate(classes)}
        counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
        for t, p in zip(truth, predicted):
            counts[index[t], index[p]] += 1
        return cls(classes, counts)

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        if self.classes != other.classes:
            raise ValueError("cannot add matrices over different classes")
        return ConfusionMatrix(self.classes, self.counts + other.counts)

    def __eq__(self, other):
        if not isinstance(other, ConfusionMatrix):
            return NotImplemented
        return self.classes == other.classes and np.array_equal(self.counts, other.counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def row_percentages(self) -> np.ndarray:
        rows = self.counts.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            pct = np.where(rows > 0, 100.0 * self.counts / np.maximum(rows, 1), 0.0)
        return pct


def accuracy(matrix) -> float:
    """Diagonal mass over total mass; accepts a ConfusionMatrix or a raw array."""
    counts = matrix.counts if isinstance(matrix, ConfusionMatrix) else np.asarray(matrix, dtype=float)
    total = counts.sum()
    if counts.size == 0 or not total > 0:
        raise ValueError("accuracy of an empty confusion matrix is undefined")
    return float(np.trace(counts) / total)


@dataclass(eq=False)
class EvalReport:
    protocol: str
    matrix: ConfusionMatrix
    overall_accuracy: float
    classifier: str = ""
    per_group: Dict[str, "EvalReport"] = field(default_factory=dict)
    per_subject: Dict[str, "EvalReport"] = field(default_factory=dict)

    def format(self, title: Optional[str] = None) -> str:
        """Aligned table: rows are true classes, columns predicted, cells row percentages."""
        pct = self.matrix.row_percentages()
        corner = "true\\pred"
        names = self.matrix.classes
        label_w = max(len(corner), *(len(c) for c in names)) + 2
        width = max(9, *(len(c) + 2 for c in names))
        head = title or f"protocol={self.protocol} classifier={self.classifier}"
        lines = [head, f"{corner:<{label_w}}" + "".join(f"{c:>{width}}" for c in names)]
        for c, row in zip(names, pct):
            lines.append(f"{c:<{label_w}}" + "".join(f"{v:>{width}.2f}" for v in row))
        lines.append(f"{'Avg.':<{label_w}}{100 * self.overall_accuracy:>{width}.2f}%  (n={self.matrix.total})")
        for name, sub in sorted(self.per_group.items()):
            lines.append("")
            lines.append(sub.format(f"{head} group={name}").rstrip("\n"))
        return "\n".join(lines) + "\n"

    def rows(self, group: str = "") -> List[dict]:
        """Machine-readable rows: one per (true, predicted) cell plus one accuracy row."""
        out = []
        pct = self.matrix.row_percentages()
        for i, t in enumerate(self.matrix.classes):
            for j, p in enumerate(self.matrix.classes):
                out.append({"protocol": self.protocol, "classifier": self.classifier, "group": group,
                            "true": t, "predicted": p, "count": int(self.matrix.counts[i, j]),
                            "percent": f"{pct[i, j]:.4f}"})
        out.append({"protocol": self.protocol, "classifier": self.classifier, "group": group,
                    "true": "*", "predicted": "*", "count": self.matrix.total,
                    "percent": f"{100 * self.overall_accuracy:.4f}"})
        for name, sub in sorted(self.per_group.items()):
            out.extend(sub.rows(group=name))
        return out


def _describe(spec: ClassifierSpec) -> str:
    return f"knn(k={spec.k})" if spec.kind == "knn" else spec.kind


def _run(train: LabeledDataset, test: LabeledDataset, spec: ClassifierSpec, classes) -> ConfusionMatrix:
    model = fit(spec, train)
    return ConfusionMatrix.from_predictions(classes, test.labels, predict_many(model, test.X, test.layout))


def stratified_folds(labels: Sequence[str], n_folds: int, seed: int) -> np.ndarray:
    """Fold id per sample: each class is shuffled then dealt round-robin.

    The dealing offset carries over between classes so fold sizes differ by
    at most one.
    """
    rng = np.random.default_rng(seed)
    labels = np.asarray(labels)
    fold = np.empty(labels.size, dtype=int)
    offset = 0
    for c in sorted(set(labels.tolist())):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(idx.size)]
        fold[idx] = (offset + np.arange(idx.size)) % n_folds
        offset = (offset + idx.size) % n_folds
    return fold


def ten_fold_cv(dataset: LabeledDataset, spec: ClassifierSpec = ClassifierSpec(), seed: int = 0,
                n_folds: int = 10) -> EvalReport:
    if len(dataset) < n_folds:
        raise ValueError(f"{n_folds}-fold cross-validation needs at least {n_folds} samples")
    counts = {c: dataset.labels.count(c) for c in dataset.classes}
    sparse = [c for c, n in counts.items() if n < 2]
    if sparse:
        raise ValueError(f"classes {sparse} have fewer than two samples")
    classes = tuple(dataset.classes)
    fold = stratified_folds(dataset.labels, n_folds, seed)
    matrix = ConfusionMatrix(classes, np.zeros((len(classes),) * 2))
    for f in range(n_folds):
        test = np.flatnonzero(fold == f)
        if test.size == 0:
            continue
        matrix = matrix + _run(dataset.subset(np.flatnonzero(fold != f)), dataset.subset(test), spec, classes)
    name = "ten-fold" if n_folds == 10 else f"{n_folds}-fold"
    return EvalReport(name, matrix, accuracy(matrix), _describe(spec))


def inset_eval(dataset: LabeledDataset, spec: ClassifierSpec = ClassifierSpec(), seed: int = 0) -> EvalReport:
    """Train and test on every sample; an upper bound on attainable accuracy."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    classes = tuple(dataset.classes)
    matrix = _run(dataset, dataset, spec, classes)
    return EvalReport("inset", matrix, accuracy(matrix), _describe(spec))


def person_dependent_split(dataset: LabeledDataset, train_fraction: float, seed: int):
    """Per subject and class, a seeded shuffle puts ``ceil(fraction * n)`` samples in training."""
    if not 0 < train_fraction <= 1:
        raise ValueError("train_fraction must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    subjects = np.asarray(dataset.subjects)
    labels = np.asarray(dataset.labels)
    train, test = [], []
    for s in sorted(set(dataset.subjects)):
        for c in sorted(set(labels[subjects == s].tolist())):
            idx = np.flatnonzero((subjects == s) & (labels == c))
            idx = idx[rng.permutation(idx.size)]
            n_train = min(idx.size, max(1, math.ceil(train_fraction * idx.size)))
            train.extend(idx[:n_train].tolist())
            test.extend(idx[n_train:].tolist())
    return np.array(sorted(train), dtype=int), np.array(sorted(test), dtype=int)


def person_dependent_eval(dataset: LabeledDataset, spec: ClassifierSpec = ClassifierSpec(),
                          train_fraction: float = 0.5, seed: int = 0) -> EvalReport:
    """Pooled per-subject split. With nothing held out the training part is scored instead."""
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    train, test = person_dependent_split(dataset, train_fraction, seed)
    if test.size == 0:
        test = train
    classes = tuple(dataset.classes)
    matrix = _run(dataset.subset(train), dataset.subset(test), spec, classes)
    return EvalReport("person-dependent", matrix, accuracy(matrix), _describe(spec))


def person_independent_eval(dataset: LabeledDataset, spec: ClassifierSpec = ClassifierSpec(),
                            seed: int = 0) -> EvalReport:
    """Leave one subject out; overall accuracy is the mean of per-subject accuracies."""
    subjects = sorted(set(dataset.subjects))
    if len(subjects) < 2:
        raise ValueError("leave-one-subject-out needs at least two subjects")
    classes = tuple(dataset.classes)
    subj = np.asarray(dataset.subjects)
    per_subject = {}
    total = ConfusionMatrix(classes, np.zeros((len(classes),) * 2))
    for s in subjects:
        m = _run(dataset.subset(np.flatnonzero(subj != s)), dataset.subset(np.flatnonzero(subj == s)),
                 spec, classes)
        per_subject[s] = EvalReport("person-independent", m, accuracy(m), _describe(spec))
        total = total + m
    mean_acc = float(np.mean([r.overall_accuracy for r in per_subject.values()]))
    return EvalReport("person-independent", total, mean_acc, _describe(spec), per_subject=per_subject)


def cross_validation(dataset, spec=ClassifierSpec(), seed=0):
    return ten_fold_cv(dataset, spec, seed)


PROTOCOLS: Dict[str, Callable[..., EvalReport]] = {
    "ten-fold": cross_validation,
    "inset": inset_eval,
    "person-dependent": person_dependent_eval,
    "person-independent": person_independent_eval,
}


def run_protocol(name: str, dataset: LabeledDataset, spec: ClassifierSpec = ClassifierSpec(),
                 seed: int = 0, train_fraction: float = 0.5) -> EvalReport:
    if name not in PROTOCOLS:
        raise ValueError(f"unknown protocol {name!r}; choose from {sorted(PROTOCOLS)}")
    if name == "person-dependent":
        return person_dependent_eval(dataset, spec, train_fraction, seed)
    return PROTOCOLS[name](dataset, spec, seed=seed)


def grouped_eval(dataset: LabeledDataset, spec: ClassifierSpec, attribute: str, protocol: str,
                 seed: int = 0, train_fraction: float = 0.5) -> EvalReport:
    """Run ``protocol`` separately inside each value group of ``attribute``.

    The top-level matrix pools the groups' matrices.
    """
    values = []
    for i, attrs in enumerate(dataset.attributes):
        if attribute not in attrs:
            raise KeyError(f"sample {dataset.ids[i]} has no attribute {attribute!r}")
        values.append(attrs[attribute])
    values = np.asarray(values)
    classes = tuple(dataset.classes)
    per_group = {}
    total = ConfusionMatrix(classes, np.zeros((len(classes),) * 2))
    for v in sorted(set(values.tolist())):
        sub = dataset.subset(np.flatnonzero(values == v))
        rep = run_protocol(protocol, sub, spec, seed, train_fraction)
        # groups may miss a class; re-express on the full class list
        counts = np.zeros((len(classes),) * 2, dtype=np.int64)
        pos = [classes.index(c) for c in rep.matrix.classes]
        counts[np.ix_(pos, pos)] = rep.matrix.counts
        rep.matrix = ConfusionMatrix(classes, counts)
        rep.protocol = f"{rep.protocol}[{attribute}={v}]"
        per_group[f"{attribute}={v}"] = rep
        total = total + rep.matrix
    return EvalReport(f"{protocol}/by-{attribute}", total, accuracy(total), _describe(spec), per_group=per_group)
