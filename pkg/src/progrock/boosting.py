"""Stagewise boosting for binary labels with logistic loss.

Two variants share one regression-tree grower:

* ``gb``  -- first-order gradient boosting: squared-error split search on the
  residuals ``y - p``, Newton leaf values ``sum(r) / sum(p (1 - p))``.
* ``xgb`` -- second-order objective with L2 leaf penalty ``lam`` and split
  penalty ``gamma``; leaf weight ``-G / (H + lam)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

log = logging.getLogger(__name__)

P_CLAMP = 1e-12
BASE_CLAMP = 10.0


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))


def log_loss(y, F) -> float:
    p = np.clip(sigmoid(F), P_CLAMP, 1.0 - P_CLAMP)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))


def split_gain(G_L, H_L, G_R, H_R, lam=1.0, gamma=0.0):
    """Second-order structure-score improvement of a split."""
    return 0.5 * (G_L ** 2 / (H_L + lam) + G_R ** 2 / (H_R + lam)
                  - (G_L + G_R) ** 2 / (H_L + H_R + lam)) - gamma


@dataclass
class RegressionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        active = self.feature[node] >= 0
        while np.any(active):
            r = rows[active]
            n = node[r]
            go_left = X[r, self.feature[n]] <= self.threshold[n]
            node[r] = np.where(go_left, self.left[n], self.right[n])
            active = self.feature[node] >= 0
        return self.value[node]


def _scan(Xn, g, h, variant, lam, gamma):
    """Best split over every feature of the node; ``None`` if nothing qualifies."""
    n, d = Xn.shape
    if n < 2:
        return None
    order = np.argsort(Xn, axis=0, kind="stable")
    xs = np.take_along_axis(Xn, order, axis=0)
    GL = np.cumsum(g[order], axis=0)[:-1]
    G = g.sum()
    if variant == "xgb":
        HL = np.cumsum(h[order], axis=0)[:-1]
        H = h.sum()
        gain = split_gain(GL, HL, G - GL, H - HL, lam, gamma)
    else:
        # squared-error reduction of residuals r = -g
        nl = np.arange(1, n, dtype=np.float64)[:, None]
        gain = GL ** 2 / nl + (G - GL) ** 2 / (n - nl) - G ** 2 / n
    valid = xs[1:] > xs[:-1]
    gain = np.where(valid, gain, -np.inf)
    flat = int(np.argmax(gain.T))
    f, i = divmod(flat, n - 1)
    best = gain[i, f]
    if not np.isfinite(best) or best <= 0:
        return None
    thr = 0.5 * (xs[i, f] + xs[i + 1, f])
    if thr >= xs[i + 1, f]:
        thr = xs[i, f]
    return float(best), f, float(thr)


def fit_regression_tree(X, g, h, max_depth, variant="xgb", lam=1.0, gamma=0.0) -> RegressionTree:
    """Grow a depth-limited tree on per-sample gradients ``g`` and hessians ``h``."""
    feature, threshold, left, right, value = [], [], [], [], []

    def leaf_value(idx):
        G, H = g[idx].sum(), h[idx].sum()
        if variant == "xgb":
            return -G / (H + lam)
        return -G / H if H > 0 else 0.0

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(leaf_value(idx))
        return len(feature) - 1

    root = np.arange(X.shape[0])
    stack = [(new_node(root), root, 0)]
    while stack:
        node, idx, depth = stack.pop()
        if depth >= max_depth:
            continue
        split = _scan(X[idx], g[idx], h[idx], variant, lam, gamma)
        if split is None:
            continue
        _, f, thr = split
        go_left = X[idx, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        feature[node], threshold[node] = f, thr
        left[node] = new_node(li)
        right[node] = new_node(ri)
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))

    return RegressionTree(np.array(feature, dtype=np.int64), np.array(threshold),
                          np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                          np.array(value, dtype=np.float64))


@dataclass
class BoostedModel:
    base_score: float
    stages: list[RegressionTree]
    learning_rate: float
    variant: str
    n_features: int
    lam: float = 0.0
    gamma: float = 0.0
    max_depth: int = 3
    train_loss: list[float] = field(default_factory=list)

    def decision_function(self, X, n_stages: int | None = None) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ConfigurationError(f"expected {self.n_features} features, got shape {X.shape}")
        F = np.full(X.shape[0], self.base_score)
        for tree in self.stages[:n_stages]:
            F += self.learning_rate * tree.predict(X)
        return F

    def truncated(self, k: int) -> "BoostedModel":
        return BoostedModel(self.base_score, self.stages[:k], self.learning_rate, self.variant,
                            self.n_features, self.lam, self.gamma, self.max_depth, self.train_loss[:k + 1])


def _initial_score(y) -> tuple[float, bool]:
    rate = y.mean()
    if rate in (0.0, 1.0):
        log.warning("single-class training labels; boosting produces a constant model")
        return (BASE_CLAMP if rate == 1.0 else -BASE_CLAMP), True
    return float(np.clip(np.log(rate / (1 - rate)), -BASE_CLAMP, BASE_CLAMP)), False


def _boost(X, y, rounds, lr, max_depth, variant, lam, gamma) -> BoostedModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    base, degenerate = _initial_score(y)
    model = BoostedModel(base, [], lr, variant, X.shape[1], lam, gamma, max_depth)
    F = np.full(X.shape[0], base)
    model.train_loss.append(log_loss(y, F))
    if degenerate:
        return model
    for _ in range(rounds):
        p = np.clip(sigmoid(F), P_CLAMP, 1.0 - P_CLAMP)
        g = p - y
        h = p * (1.0 - p)
        tree = fit_regression_tree(X, g, h, max_depth, variant, lam, gamma)
        model.stages.append(tree)
        F = F + lr * tree.predict(X)
        model.train_loss.append(log_loss(y, F))
    return model


def fit_gb(X, y, rounds: int = 100, lr: float = 0.1, max_depth: int = 3) -> BoostedModel:
    return _boost(X, y, rounds, lr, max_depth, "gb", 0.0, 0.0)


def fit_xgb(X, y, rounds: int = 200, lr: float = 0.1, max_depth: int = 5,
            lam: float = 1.0, gamma: float = 0.0) -> BoostedModel:
    return _boost(X, y, rounds, lr, max_depth, "xgb", lam, gamma)


def predict_proba(model: BoostedModel, X, n_stages: int | None = None) -> np.ndarray:
    p1 = sigmoid(model.decision_function(X, n_stages))
    return np.column_stack([1.0 - p1, p1])


# --------------------------------------------------------------------------
# serialization


def to_arrays(model: BoostedModel) -> dict[str, np.ndarray]:
    out = {"boost.node_counts": np.array([t.feature.shape[0] for t in model.stages], dtype=np.int64)}
    for name in ("feature", "threshold", "left", "right", "value"):
        parts = [getattr(t, name) for t in model.stages]
        dtype = np.int64 if name in ("feature", "left", "right") else np.float64
        out[f"boost.{name}"] = np.concatenate(parts) if parts else np.zeros(0, dtype=dtype)
    out["boost.train_loss"] = np.asarray(model.train_loss, dtype=np.float64)
    return out


def config_dict(model: BoostedModel) -> dict:
    return {"base_score": model.base_score, "learning_rate": model.learning_rate,
            "variant": model.variant, "n_features": model.n_features, "lam": model.lam,
            "gamma": model.gamma, "max_depth": model.max_depth}


def from_arrays(arrays: dict[str, np.ndarray], meta: dict) -> BoostedModel:
    sizes = arrays["boost.node_counts"]
    bounds = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    stages = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        stages.append(RegressionTree(*(arrays[f"boost.{n}"][a:b]
                                       for n in ("feature", "threshold", "left", "right", "value"))))
    return BoostedModel(meta["base_score"], stages, meta["learning_rate"], meta["variant"],
                        int(meta["n_features"]), meta["lam"], meta["gamma"], int(meta["max_depth"]),
                        list(arrays["boost.train_loss"]))
