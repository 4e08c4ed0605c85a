"""CART classification trees and bagging-style ensembles.

Three presets are provided: Random Forest (101 bootstrapped best-split trees on
sqrt(d) candidate features), ExtraTrees (100 random-threshold trees without
bootstrap) and plain Bagging (50 bootstrapped trees over every feature).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from math import ceil, sqrt

import numpy as np

from .errors import ConfigurationError

LEAF = -1


def gini(counts) -> float:
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if np.any(counts < 0) or total <= 0:
        raise ValueError("gini needs non-negative counts with a positive total")
    p = counts / total
    return float(1.0 - np.sum(p ** 2))


def _gini_binary(pos, n):
    # vectorized impurity for (n - pos, pos) counts; n > 0
    p = pos / n
    return 2.0 * p * (1.0 - p)


@dataclass
class DecisionTree:
    """Flat node arrays; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray          # (n_nodes, 2) class probabilities
    n_samples: np.ndarray
    gain: np.ndarray           # per-sample impurity decrease at each split
    n_features: int

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                depths[self.left[i]] = depths[self.right[i]] = depths[i] + 1
        return int(depths.max())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        active = self.feature[node] != LEAF
        while np.any(active):
            r = rows[active]
            n = node[r]
            go_left = X[r, self.feature[n]] <= self.threshold[n]
            node[r] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[node] != LEAF
        return node

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ConfigurationError(f"expected {self.n_features} features, got shape {X.shape}")
        return self.value[self.apply(X)]

    def feature_importance(self) -> np.ndarray:
        imp = np.zeros(self.n_features)
        internal = self.feature != LEAF
        np.add.at(imp, self.feature[internal],
                  self.n_samples[internal] * self.gain[internal] / self.n_samples[0])
        return imp


@dataclass
class TreeParams:
    max_depth: int | None = None
    min_samples_leaf: int = 1
    max_features: int | None = None   # None -> all features
    split_mode: str = "best"          # "best" | "random"


def _best_threshold_split(Xn, yn, features, msl):
    """Scan midpoints of sorted values; returns (gain, feature, threshold) or None."""
    n = yn.shape[0]
    sub = Xn[:, features]
    order = np.argsort(sub, axis=0, kind="stable")
    xs = np.take_along_axis(sub, order, axis=0)
    ys = yn[order]
    pos_left = np.cumsum(ys, axis=0)[:-1]
    n_left = np.arange(1, n, dtype=np.float64)[:, None]
    n_right = n - n_left
    total_pos = yn.sum()
    parent = _gini_binary(total_pos, n)
    child = (n_left * _gini_binary(pos_left, n_left)
             + n_right * _gini_binary(total_pos - pos_left, n_right)) / n
    gain = parent - child
    valid = (xs[1:] > xs[:-1]) & (n_left >= msl) & (n_right >= msl)
    if not np.any(valid):
        return None
    gain = np.where(valid, gain, -np.inf)
    # feature-major argmax: lowest feature index, then lowest threshold
    flat = int(np.argmax(gain.T))
    f, i = divmod(flat, n - 1)
    thr = 0.5 * (xs[i, f] + xs[i + 1, f])
    if thr >= xs[i + 1, f]:  # midpoint rounded up onto the right value
        thr = xs[i, f]
    return float(gain[i, f]), int(features[f]), float(thr)


def _random_threshold_split(Xn, yn, features, msl, rng):
    n = yn.shape[0]
    sub = Xn[:, features]
    lo, hi = sub.min(axis=0), sub.max(axis=0)
    usable = hi > lo
    if not np.any(usable):
        return None
    thr = rng.uniform(lo, hi)
    thr = np.where(usable, thr, lo)
    left = sub <= thr
    n_left = left.sum(axis=0).astype(np.float64)
    n_right = n - n_left
    pos_left = (left * yn[:, None]).sum(axis=0)
    total_pos = yn.sum()
    parent = _gini_binary(total_pos, n)
    with np.errstate(invalid="ignore", divide="ignore"):
        child = (n_left * _gini_binary(pos_left, np.maximum(n_left, 1))
                 + n_right * _gini_binary(total_pos - pos_left, np.maximum(n_right, 1))) / n
    gain = parent - child
    valid = usable & (n_left >= msl) & (n_right >= msl)
    if not np.any(valid):
        return None
    gain = np.where(valid, gain, -np.inf)
    f = int(np.argmax(gain))
    return float(gain[f]), int(features[f]), float(thr[f])


def fit_tree(X, y, params: TreeParams | None = None, rng: np.random.Generator | None = None) -> DecisionTree:
    """Greedy CART growth with Gini impurity on binary labels {0, 1}."""
    params = params or TreeParams()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[0] != y.shape[0]:
        raise ValueError("fit_tree needs a non-empty 2-D X with one label per row")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    rng = rng if rng is not None else np.random.default_rng(0)
    n, d = X.shape
    m = d if params.max_features is None else max(1, min(d, params.max_features))
    max_depth = np.inf if params.max_depth is None else params.max_depth
    msl = params.min_samples_leaf

    feature, threshold, left, right, value, n_samples, gains = [], [], [], [], [], [], []

    def new_node(idx):
        pos = y[idx].sum()
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append((1.0 - pos / idx.size, pos / idx.size))
        n_samples.append(idx.size)
        gains.append(0.0)
        return len(feature) - 1

    stack = [(new_node(np.arange(n)), np.arange(n), 0)]
    while stack:
        node, idx, depth = stack.pop()
        yn = y[idx]
        pos = yn.sum()
        if depth >= max_depth or idx.size < 2 * msl or pos == 0 or pos == idx.size:
            continue
        Xn = X[idx]
        split = None
        if m == d:
            candidates = [np.arange(d)]
        else:
            perm = rng.permutation(d)
            candidates = [np.sort(perm[i:i + m]) for i in range(0, d, m)]
        # like CART implementations, keep drawing features while all drawn ones are constant
        for feats in candidates:
            if params.split_mode == "random":
                split = _random_threshold_split(Xn, yn, feats, msl, rng)
            else:
                split = _best_threshold_split(Xn, yn, feats, msl)
            if split is not None:
                break
        if split is None:
            continue
        gain, f, thr = split
        go_left = Xn[:, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        feature[node], threshold[node], gains[node] = f, thr, max(gain, 0.0)
        left[node] = new_node(li)
        right[node] = new_node(ri)
        # push right first so the left subtree is numbered first
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))

    return DecisionTree(
        np.array(feature, dtype=np.int64), np.array(threshold), np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64), np.array(value).reshape(-1, 2),
        np.array(n_samples, dtype=np.int64), np.array(gains), d)


# --------------------------------------------------------------------------
# ensembles


@dataclass
class ForestConfig:
    n_estimators: int = 101
    bootstrap: bool = True
    max_features: str | int = "sqrt"   # "sqrt" | "all" | int
    split_mode: str = "best"
    max_depth: int | None = None
    min_samples_leaf: int = 1
    seed: int = 0
    n_jobs: int = 1

    def n_candidate_features(self, d: int) -> int:
        if self.max_features == "sqrt":
            return ceil(sqrt(d))
        if self.max_features == "all":
            return d
        return int(self.max_features)


def random_forest_config(seed: int = 0, **kw) -> ForestConfig:
    return ForestConfig(n_estimators=101, bootstrap=True, max_features="sqrt", split_mode="best", seed=seed, **kw)


def extra_trees_config(seed: int = 0, **kw) -> ForestConfig:
    return ForestConfig(n_estimators=100, bootstrap=False, max_features="sqrt", split_mode="random", seed=seed, **kw)


def bagging_config(seed: int = 0, **kw) -> ForestConfig:
    return ForestConfig(n_estimators=50, bootstrap=True, max_features="all", split_mode="best", seed=seed, **kw)


@dataclass
class ForestModel:
    trees: list[DecisionTree]
    config: ForestConfig
    n_features: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def n_estimators(self) -> int:
        return len(self.trees)


def fit_forest(X, y, config: ForestConfig | None = None) -> ForestModel:
    """Fit ``n_estimators`` trees, each on its own RNG stream.

    Stream ``i`` is spawned from the master seed, so tree ``i`` does not depend on
    the order or concurrency in which trees are fitted.
    """
    config = config or random_forest_config()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d = X.shape
    params = TreeParams(config.max_depth, config.min_samples_leaf,
                        config.n_candidate_features(d), config.split_mode)
    streams = np.random.SeedSequence(config.seed).spawn(config.n_estimators)

    def fit_one(i):
        rng = np.random.default_rng(streams[i])
        idx = rng.integers(0, n, size=n) if config.bootstrap else np.arange(n)
        return fit_tree(X[idx], y[idx], params, rng)

    if config.n_jobs > 1:
        with ThreadPoolExecutor(config.n_jobs) as pool:
            trees = list(pool.map(fit_one, range(config.n_estimators)))
    else:
        trees = [fit_one(i) for i in range(config.n_estimators)]
    return ForestModel(trees, config, d)


def predict_proba(model: ForestModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ConfigurationError(f"expected {model.n_features} features, got shape {X.shape}")
    out = np.zeros((X.shape[0], 2))
    for tree in model.trees:
        out += tree.predict_proba(X)
    return out / len(model.trees)


def feature_importance(model: ForestModel) -> np.ndarray:
    """Mean decrease in impurity, normalized per tree and then overall."""
    total = np.zeros(model.n_features)
    for tree in model.trees:
        imp = tree.feature_importance()
        s = imp.sum()
        if s > 0:
            total += imp / s
    s = total.sum()
    return total / s if s > 0 else total


# --------------------------------------------------------------------------
# serialization

_TREE_FIELDS = ("feature", "threshold", "left", "right", "value", "n_samples", "gain")


def to_arrays(model: ForestModel) -> dict[str, np.ndarray]:
    sizes = np.array([t.n_nodes for t in model.trees], dtype=np.int64)
    out = {"forest.node_counts": sizes}
    for name in _TREE_FIELDS:
        out[f"forest.{name}"] = np.concatenate([getattr(t, name) for t in model.trees])
    return out


def config_dict(model: ForestModel) -> dict:
    return {"forest_config": asdict(model.config), "n_features": model.n_features}


def from_arrays(arrays: dict[str, np.ndarray], meta: dict) -> ForestModel:
    sizes = arrays["forest.node_counts"]
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    d = int(meta["n_features"])
    trees = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        parts = {name: arrays[f"forest.{name}"][a:b] for name in _TREE_FIELDS}
        trees.append(DecisionTree(n_features=d, **parts))
    return ForestModel(trees, ForestConfig(**meta["forest_config"]), d)
