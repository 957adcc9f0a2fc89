"""Experiment protocol: balancing, splits, grid search, curves, importance.

Every random choice derives from a master seed through tagged sub-seeds, so
a full experiment is reproducible and independent of worker count. Repeats
are mutually independent rounds of balance/split/train/evaluate; the
hyperparameter grid is searched once, on the first round's training set,
and the chosen configuration is reused across rounds.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import product

import numpy as np

from .features import FEATURE_SUBSETS, FeatureVector, subset_slot_names
from .forest import ForestConfig, ForestModel, fit

_TAG_SPLIT = 1
_TAG_FOREST = 2
_TAG_FOLDS = 3
_TAG_GRID = 4
_TAG_IMPORTANCE = 5


class EvaluationError(ValueError):
    """Invalid experiment input (missing classes, degenerate curves, ...)."""


def derive_seed(*parts: int) -> int:
    """Stable 64-bit sub-seed from integer parts (platform-independent)."""
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(int(part).to_bytes(16, "little", signed=True))
    return int.from_bytes(h.digest(), "little")


@dataclass(frozen=True)
class GridSpec:
    """Hyperparameter grid; the default matches the reference protocol."""

    max_depth: tuple[int, ...] = tuple(range(3, 11))
    max_features: tuple[int, ...] = tuple(range(3, 7))
    min_samples_leaf: tuple[int, ...] = (1, 3, 5)

    def cells(self):
        """Cells in ascending order; earlier cells win score ties."""
        return product(self.max_depth, self.max_features, self.min_samples_leaf)

    def size(self) -> int:
        return (len(self.max_depth) * len(self.max_features)
                * len(self.min_samples_leaf))


@dataclass(frozen=True)
class ExperimentSpec:
    fraud_type: str
    feature_subset: str = "all12"
    exclude_k1: bool = False
    n_repeats: int = 100
    train_fraction: Fraction = Fraction(3, 4)
    grid: GridSpec = field(default_factory=GridSpec)
    cv_folds: int = 10
    seed: int = 0
    n_trees: int = 300
    importance_permutations: int = 10

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie strictly between 0 and 1")
        if self.n_repeats < 1:
            raise ValueError("n_repeats must be >= 1")
        if self.grid.size() == 0:
            raise ValueError("grid must be non-empty")
        if self.feature_subset not in FEATURE_SUBSETS:
            raise ValueError(f"unknown feature subset {self.feature_subset!r}")


@dataclass(frozen=True)
class CurvePoints:
    kind: str                # "ROC" or "PR"
    points: np.ndarray       # (m, 2) of (x, y) in [0, 1]^2


@dataclass(frozen=True)
class EvalReport:
    spec: ExperimentSpec
    chosen_config: ForestConfig
    feature_names: tuple[str, ...]
    roc_aucs: np.ndarray             # (n_repeats,)
    pr_aucs: np.ndarray              # (n_repeats,)
    importances: np.ndarray          # (n_repeats, n_features)
    roc_curves: list[CurvePoints]
    pr_curves: list[CurvePoints]

    @property
    def roc_auc_mean(self) -> float:
        return float(self.roc_aucs.mean())

    @property
    def roc_auc_std(self) -> float:
        return float(self.roc_aucs.std())

    @property
    def pr_auc_mean(self) -> float:
        return float(self.pr_aucs.mean())

    @property
    def pr_auc_std(self) -> float:
        return float(self.pr_aucs.std())

    @property
    def importance_mean(self) -> np.ndarray:
        return self.importances.mean(axis=0)

    @property
    def importance_std(self) -> np.ndarray:
        return self.importances.std(axis=0)


# -- balancing and splitting ------------------------------------------------

def balance_and_split(negatives, positives, train_fraction, seed):
    """Subsample negatives to the positive count, then split per class.

    When there are fewer negatives than positives, subsampling is skipped
    and all samples of both classes are used. Each class is split
    independently: floor(train_fraction * n) rows go to training, the
    remainder to test. Returns ((X_train, y_train), (X_test, y_test)).
    """
    negatives = np.asarray(negatives, dtype=np.float64)
    positives = np.asarray(positives, dtype=np.float64)
    if len(negatives) < 4 or len(positives) < 4:
        raise EvaluationError("class too small to split (need >= 4 per class)")
    rng = np.random.default_rng(seed)
    if len(negatives) >= len(positives):
        keep = rng.choice(len(negatives), size=len(positives), replace=False)
        negatives = negatives[keep]
    neg_train, neg_test = _split_class(negatives, train_fraction, rng)
    pos_train, pos_test = _split_class(positives, train_fraction, rng)
    X_train = np.vstack([neg_train, pos_train])
    y_train = np.concatenate([np.zeros(len(neg_train), np.int64),
                              np.ones(len(pos_train), np.int64)])
    X_test = np.vstack([neg_test, pos_test])
    y_test = np.concatenate([np.zeros(len(neg_test), np.int64),
                             np.ones(len(pos_test), np.int64)])
    return (X_train, y_train), (X_test, y_test)


def _split_class(X, train_fraction, rng):
    n = len(X)
    n_train = int(Fraction(train_fraction) * n)  # floor; remainder to test
    if n_train < 1 or n - n_train < 1:
        raise EvaluationError("class too small to split")
    order = rng.permutation(n)
    return X[order[:n_train]], X[order[n_train:]]


def stratified_folds(y, n_folds, rng) -> np.ndarray:
    """Fold assignment balanced within each class; every fold gets both."""
    y = np.asarray(y)
    fold_id = np.empty(len(y), dtype=np.int64)
    for cls in (0, 1):
        members = np.flatnonzero(y == cls)
        if len(members) < n_folds:
            raise EvaluationError(
                f"class {cls} has {len(members)} samples, fewer than "
                f"{n_folds} folds; a fold would miss the class")
        members = members[rng.permutation(len(members))]
        fold_id[members] = np.arange(len(members)) % n_folds
    return fold_id


def grid_search(X, y, grid: GridSpec, cv_folds: int, seed: int,
                n_trees: int = 300) -> ForestConfig:
    """Pick the grid cell with maximal mean ROC AUC over stratified CV folds.

    Ties go to the smaller max_depth, then max_features, then
    min_samples_leaf (cells are scanned in that order with strict
    improvement).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if len(X) < cv_folds:
        raise EvaluationError("fewer training samples than folds")
    rng = np.random.default_rng(derive_seed(seed, _TAG_FOLDS))
    fold_id = stratified_folds(y, cv_folds, rng)
    best_score = -np.inf
    best_cell = None
    for cell_idx, (depth, feats, leaf) in enumerate(grid.cells()):
        scores = np.empty(cv_folds)
        for f in range(cv_folds):
            train_mask = fold_id != f
            config = ForestConfig(
                n_trees=n_trees, max_depth=depth, max_features=feats,
                min_samples_leaf=leaf,
                seed=derive_seed(seed, _TAG_GRID, cell_idx, f))
            model = fit(X[train_mask], y[train_mask], config)
            probas = model.predict_proba(X[~train_mask])
            scores[f] = auc(roc_curve(probas, y[~train_mask]))
        mean_score = float(scores.mean())
        if mean_score > best_score:
            best_score = mean_score
            best_cell = (depth, feats, leaf)
    depth, feats, leaf = best_cell
    return ForestConfig(n_trees=n_trees, max_depth=depth, max_features=feats,
                        min_samples_leaf=leaf, seed=seed)


# -- curves and areas --------------------------------------------------------

def _score_blocks(probas, labels):
    probas = np.asarray(probas, dtype=np.float64)
    labels = np.asarray(labels)
    order = np.argsort(-probas, kind="stable")
    y_sorted = labels[order]
    p_sorted = probas[order]
    tp = np.cumsum(y_sorted)
    fp = np.cumsum(1 - y_sorted)
    # indices closing each block of equal probability
    ends = np.flatnonzero(np.diff(p_sorted) != 0)
    ends = np.append(ends, len(p_sorted) - 1)
    return tp[ends], fp[ends]


def roc_curve(probas, labels) -> CurvePoints:
    """ROC points after each equal-probability block, starting at (0, 0).

    Tied scores advance true and false positives in a single segment.
    """
    labels = np.asarray(labels)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise EvaluationError("ROC curve needs both classes in the test set")
    tp, fp = _score_blocks(probas, labels)
    xs = np.concatenate([[0.0], fp / n_neg])
    ys = np.concatenate([[0.0], tp / n_pos])
    return CurvePoints(kind="ROC", points=np.column_stack([xs, ys]))


def pr_curve(probas, labels) -> CurvePoints:
    """(recall, precision) after each equal-probability block."""
    labels = np.asarray(labels)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise EvaluationError("PR curve needs at least one positive sample")
    tp, fp = _score_blocks(probas, labels)
    recall = tp / n_pos
    precision = tp / (tp + fp)
    return CurvePoints(kind="PR", points=np.column_stack([recall, precision]))


def auc(curve: CurvePoints) -> float:
    """Trapezoidal area under the piecewise-linear curve."""
    pts = curve.points
    if len(pts) < 2:
        raise EvaluationError(f"degenerate {curve.kind} curve with {len(pts)} point(s)")
    return float(np.trapezoid(pts[:, 1], pts[:, 0]))


def roc_auc(probas, labels) -> float:
    return auc(roc_curve(probas, labels))


# -- permutation importance ---------------------------------------------------

def _permutation(seed: int, feature_index: int, perm_index: int, m: int) -> np.ndarray:
    return np.random.default_rng([seed, feature_index, perm_index]).permutation(m)


def permutation_importance(model: ForestModel, X_test, y_test,
                           feature_index: int, n_perms: int = 10,
                           seed: int = 0) -> float:
    """Drop in test ROC AUC when one feature column is permuted.

    Averaged over ``n_perms`` uniform random permutations of that column
    within the test set.
    """
    X_test = np.asarray(X_test, dtype=np.float64)
    if len(X_test) < 2:
        raise EvaluationError("need at least 2 test samples")
    baseline = roc_auc(model.predict_proba(X_test), y_test)
    drops = np.empty(n_perms)
    for p in range(n_perms):
        permuted = X_test.copy()
        perm = _permutation(seed, feature_index, p, len(X_test))
        permuted[:, feature_index] = permuted[perm, feature_index]
        drops[p] = roc_auc(model.predict_proba(permuted), y_test)
    return baseline - float(drops.mean())


def _all_importances(model: ForestModel, X_test, y_test, n_perms: int,
                     seed: int) -> np.ndarray:
    """Permutation importance for every feature in one batched prediction."""
    m, d = X_test.shape
    baseline = roc_auc(model.predict_proba(X_test), y_test)
    variants = np.repeat(X_test[np.newaxis, :, :], d * n_perms, axis=0)
    v = 0
    for fi in range(d):
        for p in range(n_perms):
            perm = _permutation(seed, fi, p, m)
            variants[v, :, fi] = X_test[perm, fi]
            v += 1
    probas = model.predict_proba(variants.reshape(-1, d)).reshape(d, n_perms, m)
    out = np.empty(d)
    for fi in range(d):
        aucs = [roc_auc(probas[fi, p], y_test) for p in range(n_perms)]
        out[fi] = baseline - float(np.mean(aucs))
    return out


# -- full experiment ----------------------------------------------------------

def class_matrices(rows: list[FeatureVector], fraud_type: str,
                   feature_subset: str, exclude_k1: bool):
    """(negatives, positives, feature names) for one fraud type.

    ``exclude_k1`` drops the single-partner users and removes the two
    degree/strength binaries from whatever subset was requested (they are
    constant on the remaining users).
    """
    keep = list(FEATURE_SUBSETS[feature_subset])
    if exclude_k1:
        keep = [i for i in keep if i not in (0, 1)]
    names = tuple(subset_slot_names("all12")[i] for i in range(12) if i in keep)
    neg_rows = [r for r in rows if r.user_type == "normal"]
    pos_rows = [r for r in rows if r.user_type == fraud_type]
    if exclude_k1:
        neg_rows = [r for r in neg_rows if r.slots[0] != 1.0]
        pos_rows = [r for r in pos_rows if r.slots[0] != 1.0]
    if not neg_rows or not pos_rows:
        raise EvaluationError(
            f"need both normal and {fraud_type!r} rows"
            + (" after excluding single-partner users" if exclude_k1 else ""))
    negatives = np.array([[r.slots[i] for i in keep] for r in neg_rows])
    positives = np.array([[r.slots[i] for i in keep] for r in pos_rows])
    return negatives, positives, names


def run_experiment(rows: list[FeatureVector], spec: ExperimentSpec) -> EvalReport:
    """Grid-search once, then n_repeats rounds of balance/split/train/test."""
    negatives, positives, names = class_matrices(
        rows, spec.fraud_type, spec.feature_subset, spec.exclude_k1)
    tuning_train, _ = balance_and_split(
        negatives, positives, spec.train_fraction,
        derive_seed(spec.seed, _TAG_SPLIT, 0))
    chosen = grid_search(tuning_train[0], tuning_train[1], spec.grid,
                         spec.cv_folds, derive_seed(spec.seed, _TAG_GRID),
                         n_trees=spec.n_trees)

    n_feat = negatives.shape[1]
    roc_aucs = np.empty(spec.n_repeats)
    pr_aucs = np.empty(spec.n_repeats)
    importances = np.empty((spec.n_repeats, n_feat))
    roc_curves: list[CurvePoints] = []
    pr_curves: list[CurvePoints] = []
    for r in range(spec.n_repeats):
        (X_train, y_train), (X_test, y_test) = balance_and_split(
            negatives, positives, spec.train_fraction,
            derive_seed(spec.seed, _TAG_SPLIT, r))
        model = fit(X_train, y_train,
                    replace(chosen, seed=derive_seed(spec.seed, _TAG_FOREST, r)),
                    feature_subset=spec.feature_subset)
        probas = model.predict_proba(X_test)
        rc = roc_curve(probas, y_test)
        pc = pr_curve(probas, y_test)
        roc_curves.append(rc)
        pr_curves.append(pc)
        roc_aucs[r] = auc(rc)
        pr_aucs[r] = auc(pc)
        importances[r] = _all_importances(
            model, X_test, y_test, spec.importance_permutations,
            derive_seed(spec.seed, _TAG_IMPORTANCE, r))
    return EvalReport(spec=spec, chosen_config=chosen, feature_names=names,
                      roc_aucs=roc_aucs, pr_aucs=pr_aucs,
                      importances=importances,
                      roc_curves=roc_curves, pr_curves=pr_curves)


def mean_curve(curves: list[CurvePoints], grid_size: int = 101) -> CurvePoints:
    """Average y over repeats on a common x grid (linear interpolation)."""
    xs = np.linspace(0.0, 1.0, grid_size)
    acc = np.zeros(grid_size)
    for curve in curves:
        pts = curve.points
        acc += np.interp(xs, pts[:, 0], pts[:, 1])
    return CurvePoints(kind=curves[0].kind,
                       points=np.column_stack([xs, acc / len(curves)]))
