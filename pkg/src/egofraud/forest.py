"""Random-forest binary classifier built from scratch.

Matches the pipeline configuration: bootstrap resampling per tree, uniform
feature subsampling at every split, Gini-minimizing splits with thresholds
at midpoints of consecutive distinct values, and probabilities given by the
mean leaf positive fraction over trees. Ties between equally good splits go
to the lowest feature index, then the lowest threshold. Training is
deterministic for a fixed seed regardless of thread count.
"""
from __future__ import annotations

import io
import zipfile
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels

_FORMAT_NAME = "egofraud-forest"
_FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Raised for unreadable or incompatible serialized models."""


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 300
    max_depth: int = 10
    max_features: int = 3
    min_samples_leaf: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.max_features < 1:
            raise ValueError("max_features must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")


@dataclass(frozen=True)
class ForestModel:
    """Trained ensemble; immutable and safe for concurrent prediction.

    Trees are stored as padded arrays indexed ``[tree, node]``: ``feature``
    is -1 at leaves, internal nodes send ``x[feature] <= threshold`` left.
    ``value`` holds the positive training fraction at each node and
    ``count`` the number of bootstrap samples that reached it.
    """

    config: ForestConfig
    n_features: int
    feature_subset: str
    feature: np.ndarray    # int32 [n_trees, max_nodes]
    threshold: np.ndarray  # float64
    left: np.ndarray       # int32
    right: np.ndarray      # int32
    value: np.ndarray      # float64
    count: np.ndarray      # int64
    n_nodes: np.ndarray    # int64 [n_trees]

    def predict_proba(self, X) -> np.ndarray | float:
        """Mean leaf positive fraction over trees; in [0, 1]."""
        arr = np.ascontiguousarray(X, dtype=np.float64)
        single = arr.ndim == 1
        if single:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2 or arr.shape[1] != self.n_features:
            raise ValueError(
                f"expected feature vectors of length {self.n_features}, "
                f"got shape {arr.shape}")
        out = np.empty(arr.shape[0], dtype=np.float64)
        _kernels.predict_forest(self.feature, self.threshold, self.left,
                                self.right, self.value, arr, out)
        return float(out[0]) if single else out

    def predict(self, X) -> np.ndarray | int:
        """Positive iff the positive probability exceeds 0.5 (0.5 itself is
        classified negative)."""
        proba = self.predict_proba(X)
        if isinstance(proba, float):
            return int(proba > 0.5)
        return (proba > 0.5).astype(np.int64)


def fit(X, y, config: ForestConfig, feature_subset: str = "all12") -> ForestModel:
    """Train a forest on (samples, 0/1 labels).

    Every tree sees a bootstrap resample of the full training-set size; at
    each node ``max_features`` candidate features are drawn without
    replacement. Splitting stops at ``max_depth``, at pure nodes, and where
    any child would fall under ``min_samples_leaf``.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2:
        raise ValueError("X must be 2-dimensional (samples x features)")
    n, d = X.shape
    if y.shape != (n,):
        raise ValueError(f"y must have shape ({n},), got {y.shape}")
    if n < 2:
        raise ValueError("need at least 2 training samples")
    if not np.isfinite(X).all():
        raise ValueError("feature matrix contains non-finite values")
    y_int = y.astype(np.int64)
    if not np.isin(y_int, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    if y_int.min() == y_int.max():
        raise ValueError("training set contains a single class")
    if config.max_features > d:
        raise ValueError(
            f"max_features={config.max_features} exceeds feature count {d}")
    if n < config.min_samples_leaf:
        raise ValueError("fewer samples than min_samples_leaf")

    ranks = np.empty((n, d), dtype=np.int32)
    uniq_parts = []
    offsets = np.zeros(d + 1, dtype=np.int64)
    for f in range(d):
        uniq, inverse = np.unique(X[:, f], return_inverse=True)
        ranks[:, f] = inverse.reshape(-1)
        uniq_parts.append(uniq)
        offsets[f + 1] = offsets[f] + len(uniq)
    uniq_flat = np.concatenate(uniq_parts)

    t = config.n_trees
    max_nodes = min(2 ** (config.max_depth + 1) - 1, 2 * n - 1)
    feature = np.full((t, max_nodes), -1, dtype=np.int32)
    threshold = np.zeros((t, max_nodes), dtype=np.float64)
    left = np.zeros((t, max_nodes), dtype=np.int32)
    right = np.zeros((t, max_nodes), dtype=np.int32)
    value = np.zeros((t, max_nodes), dtype=np.float64)
    count = np.zeros((t, max_nodes), dtype=np.int64)
    n_nodes = np.zeros(t, dtype=np.int64)
    _kernels.fit_forest(ranks, y_int, uniq_flat, offsets,
                        t, config.max_depth, config.max_features,
                        config.min_samples_leaf,
                        np.uint64(config.seed & 0xFFFFFFFFFFFFFFFF),
                        feature, threshold, left, right, value, count, n_nodes)
    used = int(n_nodes.max())
    return ForestModel(
        config=config,
        n_features=d,
        feature_subset=feature_subset,
        feature=np.ascontiguousarray(feature[:, :used]),
        threshold=np.ascontiguousarray(threshold[:, :used]),
        left=np.ascontiguousarray(left[:, :used]),
        right=np.ascontiguousarray(right[:, :used]),
        value=np.ascontiguousarray(value[:, :used]),
        count=np.ascontiguousarray(count[:, :used]),
        n_nodes=n_nodes,
    )


def serialize(model: ForestModel) -> bytes:
    """Self-describing binary container; round-trips predictions bit-exactly."""
    buf = io.BytesIO()
    np.savez(
        buf,
        format=np.array(_FORMAT_NAME),
        version=np.array(_FORMAT_VERSION, dtype=np.int64),
        n_features=np.array(model.n_features, dtype=np.int64),
        feature_subset=np.array(model.feature_subset),
        config=np.array([model.config.n_trees, model.config.max_depth,
                         model.config.max_features, model.config.min_samples_leaf,
                         model.config.seed], dtype=np.int64),
        feature=model.feature,
        threshold=model.threshold,
        left=model.left,
        right=model.right,
        value=model.value,
        count=model.count,
        n_nodes=model.n_nodes,
    )
    return buf.getvalue()


def deserialize(data: bytes) -> ForestModel:
    try:
        with np.load(io.BytesIO(data)) as payload:
            if str(payload["format"]) != _FORMAT_NAME:
                raise ModelFormatError("not an egofraud forest model")
            version = int(payload["version"])
            if version != _FORMAT_VERSION:
                raise ModelFormatError(
                    f"unsupported model format version {version}")
            cfg = payload["config"]
            config = ForestConfig(n_trees=int(cfg[0]), max_depth=int(cfg[1]),
                                  max_features=int(cfg[2]),
                                  min_samples_leaf=int(cfg[3]), seed=int(cfg[4]))
            return ForestModel(
                config=config,
                n_features=int(payload["n_features"]),
                feature_subset=str(payload["feature_subset"]),
                feature=payload["feature"],
                threshold=payload["threshold"],
                left=payload["left"],
                right=payload["right"],
                value=payload["value"],
                count=payload["count"],
                n_nodes=payload["n_nodes"],
            )
    except ModelFormatError:
        raise
    except (zipfile.BadZipFile, KeyError, OSError, ValueError, EOFError) as exc:
        raise ModelFormatError(f"cannot decode model payload: {exc}") from exc


def save_model(model: ForestModel, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(model))


def load_model(path) -> ForestModel:
    with open(path, "rb") as fh:
        return deserialize(fh.read())


def with_seed(config: ForestConfig, seed: int) -> ForestConfig:
    return replace(config, seed=seed)
