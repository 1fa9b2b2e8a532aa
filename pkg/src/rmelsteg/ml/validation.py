"""Datasets, stratified k-fold splitting and cross-validated evaluation."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..errors import TooFewSamples, ValidationError
from .svm import Kernel, svm_predict, svm_train

COVER, STEGO = 0, 1
GROUP_SEP = "@"


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=int)
        if not self.ids:
            self.ids = [str(i) for i in range(self.y.size)]
        if self.X.ndim != 2 or self.X.shape[0] != self.y.size or len(self.ids) != self.y.size:
            raise ValidationError("X, y and ids disagree on the number of rows")
        if not np.isfinite(self.X).all():
            raise ValidationError("dataset contains non-finite features")
        if not np.isin(self.y, (COVER, STEGO)).all():
            raise ValidationError("labels must be 0 (cover) or 1 (stego)")

    def __len__(self) -> int:
        return self.y.size

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.X[idx], self.y[idx], [self.ids[i] for i in idx])

    def groups(self) -> list[str]:
        """Cover identity of every row: the part of the id before ``@``."""
        return [i.split(GROUP_SEP, 1)[0] for i in self.ids]


def _round_robin(order: np.ndarray, k: int, offset: int) -> np.ndarray:
    return (np.arange(order.size) + offset) % k


def stratified_folds(y, k: int, seed: int = 0, groups: Sequence[str] | None = None) -> np.ndarray:
    """Fold index per row.

    Without groups every class is shuffled and dealt round-robin, so per-class
    fold sizes differ by at most one. With groups, whole groups are dealt
    instead (stratified by the groups' label composition), which keeps a cover
    and its stego twins in the same fold.
    """
    y = np.asarray(y, dtype=int)
    rng = np.random.default_rng(seed)
    fold = np.empty(y.size, dtype=int)
    if groups is None:
        counts = [np.count_nonzero(y == c) for c in (COVER, STEGO)]
        if min(counts) < k:
            raise TooFewSamples(f"class sizes {counts} smaller than k={k}")
        offset = 0
        for c in (COVER, STEGO):
            idx = np.flatnonzero(y == c)
            idx = idx[rng.permutation(idx.size)]
            fold[idx] = _round_robin(idx, k, offset)
            offset = (offset + idx.size) % k
        return fold

    groups = list(groups)
    if len(groups) != y.size:
        raise ValidationError("one group label per row required")
    names = sorted(set(groups))
    members = {g: [] for g in names}
    for i, g in enumerate(groups):
        members[g].append(i)
    comp = {g: tuple(sorted(y[members[g]].tolist())) for g in names}
    for c in (COVER, STEGO):
        n_groups = sum(1 for g in names if c in comp[g])
        if n_groups < k:
            raise TooFewSamples(f"only {n_groups} groups contain class {c}; need k={k}")
    offset = 0
    for sig in sorted(set(comp.values())):
        gs = np.array([g for g in names if comp[g] == sig])
        gs = gs[rng.permutation(gs.size)]
        for pos, g in enumerate(gs):
            fold[members[g]] = (pos + offset) % k
        offset = (offset + gs.size) % k
    return fold


def confusion(y_true, y_pred) -> dict[str, int]:
    y_true, y_pred = np.asarray(y_true), np.asarray(y_pred)
    return {
        "tp": int(np.count_nonzero((y_true == STEGO) & (y_pred == STEGO))),
        "fn": int(np.count_nonzero((y_true == STEGO) & (y_pred == COVER))),
        "tn": int(np.count_nonzero((y_true == COVER) & (y_pred == COVER))),
        "fp": int(np.count_nonzero((y_true == COVER) & (y_pred == STEGO))),
    }


def rates(cm: dict[str, int]) -> tuple[float, float, float]:
    """Sensitivity (stego hit rate), specificity (cover pass rate), accuracy."""
    se = cm["tp"] / max(cm["tp"] + cm["fn"], 1)
    sp = cm["tn"] / max(cm["tn"] + cm["fp"], 1)
    acc = (cm["tp"] + cm["tn"]) / max(sum(cm.values()), 1)
    return se, sp, acc


@dataclass
class CvReport:
    k: int
    seed: int
    folds: list[dict]
    pooled: dict
    masks: list[list[int]] = field(default_factory=list)

    @property
    def se(self) -> float:
        return float(np.mean([f["se"] for f in self.folds]))

    @property
    def sp(self) -> float:
        return float(np.mean([f["sp"] for f in self.folds]))

    @property
    def accuracy(self) -> float:
        return float(np.mean([f["accuracy"] for f in self.folds]))

    def to_dict(self) -> dict:
        d = {
            "k": self.k,
            "seed": self.seed,
            "folds": self.folds,
            "mean": {"se": self.se, "sp": self.sp, "accuracy": self.accuracy},
            "pooled": self.pooled,
        }
        if self.masks:
            d["masks"] = self.masks
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["fold", "se", "sp", "accuracy", "tp", "fn", "tn", "fp"])
        for f in self.folds:
            w.writerow([f["fold"], f"{f['se']:.6f}", f"{f['sp']:.6f}", f"{f['accuracy']:.6f}",
                        f["tp"], f["fn"], f["tn"], f["fp"]])
        w.writerow(["mean", f"{self.se:.6f}", f"{self.sp:.6f}", f"{self.accuracy:.6f}", "", "", "", ""])
        p = self.pooled
        w.writerow(["pooled", f"{p['se']:.6f}", f"{p['sp']:.6f}", f"{p['accuracy']:.6f}",
                    p["tp"], p["fn"], p["tn"], p["fp"]])
        return buf.getvalue()

    def table_row(self) -> str:
        return f"Se. {100 * self.se:5.1f}   Sp. {100 * self.sp:5.1f}   Acc. {100 * self.accuracy:5.1f}"


MaskSelector = Callable[[Dataset], np.ndarray]


def kfold_cv(ds: Dataset, k: int = 10, kernel: Kernel | str = "rbf", C: float = 10.0,
             seed: int = 0, grouped: bool = False, select: MaskSelector | None = None,
             mask=None) -> CvReport:
    """Stratified k-fold CV. Normalisation is fitted on each training split only.

    ``select`` (e.g. a GA wrapper) is run on every training split to pick a
    feature mask; alternatively a fixed ``mask`` may be given.
    """
    fold = stratified_folds(ds.y, k, seed, ds.groups() if grouped else None)
    folds, masks = [], []
    total = {"tp": 0, "fn": 0, "tn": 0, "fp": 0}
    for f in range(k):
        tr, te = np.flatnonzero(fold != f), np.flatnonzero(fold == f)
        train = ds.subset(tr)
        fmask = select(train) if select is not None else mask
        if fmask is not None:
            masks.append(np.asarray(fmask, dtype=int).tolist())
        model = svm_train(train.X, train.y, kernel, C, seed=seed, feature_mask=fmask)
        pred, _ = svm_predict(model, ds.X[te])
        cm = confusion(ds.y[te], pred)
        se, sp, acc = rates(cm)
        folds.append({"fold": f, "n_test": int(te.size), "se": se, "sp": sp, "accuracy": acc, **cm})
        for key in total:
            total[key] += cm[key]
    se, sp, acc = rates(total)
    return CvReport(k, seed, folds, {"se": se, "sp": sp, "accuracy": acc, **total}, masks)
