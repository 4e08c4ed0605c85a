"""Train any supported model on snippet tensors and wrap it as an artifact.

Default input wiring: Random Forest and ExtraTrees see the raw 34560-value
vectors, Bagging sees PCA-100 and the boosters PCA-200. Neural networks see
the standardized 160 x 216 tensors directly.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import boosting, pca_reduce, tree_ensembles
from ..errors import ArtifactFormatError, ConfigurationError, DatasetError
from ..neural1d import ARCHITECTURES, Network, NetworkSpec, build_architecture, train
from ..tensorize import ChannelScaler, SnippetTensor, fit_scaler
from .artifact import ModelArtifact

log = logging.getLogger(__name__)

ENSEMBLES = ("rf", "extratrees", "bagging")
BOOSTERS = ("gb", "xgb")
MODEL_NAMES = ENSEMBLES + BOOSTERS + ARCHITECTURES
DEFAULT_PCA = {"rf": None, "extratrees": None, "bagging": 100, "gb": 200, "xgb": 200}
DEFAULT_ROUNDS = {"gb": 100, "xgb": 200}


@dataclass
class TrainOptions:
    pca: int | None = None
    rounds: int | None = None
    seed: int = 0
    epochs: int = 10
    batch_size: int = 32
    n_jobs: int = 1


@dataclass
class TrainedModel:
    name: str
    scaler: ChannelScaler
    model: object
    pca: pca_reduce.PCAModel | None = None
    config: dict = field(default_factory=dict)
    loss_trace: list[float] = field(default_factory=list)
    learning_rates: list[float] = field(default_factory=list)

    @property
    def kind(self) -> str:
        if self.name in ENSEMBLES:
            return "pca+ensemble"
        if self.name in BOOSTERS:
            return "pca+boosted"
        return "neural"

    def _vectors(self, tensors: list[SnippetTensor]) -> np.ndarray:
        X = np.stack([self.scaler.apply(t.values).reshape(-1) for t in tensors])
        return pca_reduce.transform(self.pca, X) if self.pca is not None else X

    def predict_proba(self, tensors: list[SnippetTensor]) -> np.ndarray:
        """Probability of prog for every snippet."""
        if not tensors:
            return np.zeros(0)
        if self.kind == "neural":
            X = np.stack([self.scaler.apply(t.values) for t in tensors])
            return self.model.predict_proba(X)[:, 1]
        X = self._vectors(tensors)
        if self.kind == "pca+ensemble":
            return tree_ensembles.predict_proba(self.model, X)[:, 1]
        return boosting.predict_proba(self.model, X)[:, 1]

    def to_artifact(self) -> ModelArtifact:
        arrays = {"scaler.mean": self.scaler.mean, "scaler.std": self.scaler.std}
        if self.pca is not None:
            arrays.update(pca_reduce.to_arrays(self.pca))
        config = dict(self.config, model=self.name)
        if self.kind == "pca+ensemble":
            arrays.update(tree_ensembles.to_arrays(self.model))
            config["payload"] = tree_ensembles.config_dict(self.model)
        elif self.kind == "pca+boosted":
            arrays.update(boosting.to_arrays(self.model))
            config["payload"] = boosting.config_dict(self.model)
        else:
            arrays.update(self.model.to_arrays())
            config["payload"] = {"spec": self.model.spec.to_dict(), "manifest": self.model.manifest()}
        return ModelArtifact(self.kind, config, arrays)

    @classmethod
    def from_artifact(cls, art: ModelArtifact) -> "TrainedModel":
        cfg = art.config
        name = cfg.get("model")
        if name not in MODEL_NAMES:
            raise ArtifactFormatError(f"artifact names unknown model {name!r}")
        scaler = ChannelScaler(art.arrays["scaler.mean"], art.arrays["scaler.std"])
        pca = pca_reduce.from_arrays(art.arrays) if "pca.mean" in art.arrays else None
        payload = cfg["payload"]
        if art.kind == "pca+ensemble":
            model = tree_ensembles.from_arrays(art.arrays, payload)
        elif art.kind == "pca+boosted":
            model = boosting.from_arrays(art.arrays, payload)
        else:
            model = Network.from_arrays(NetworkSpec.from_dict(payload["spec"]), art.arrays)
        base = {k: v for k, v in cfg.items() if k not in ("model", "payload")}
        out = cls(name, scaler, model, pca, base)
        if out.kind != art.kind:
            raise ArtifactFormatError(f"model {name} stored under kind {art.kind}")
        return out


def _labels(tensors):
    y = np.array([t.label for t in tensors])
    if np.any((y != 0) & (y != 1)):
        raise DatasetError("training snippets must be labelled prog or nonprog")
    return y


def train_model(name: str, tensors: list[SnippetTensor], options: TrainOptions | None = None,
                extra_config: dict | None = None) -> TrainedModel:
    """Fit the scaler on ``tensors`` (training partition only) and then the model."""
    if name not in MODEL_NAMES:
        raise ConfigurationError(f"unknown model {name!r}; choose from {', '.join(MODEL_NAMES)}")
    if not tensors:
        raise DatasetError("no training snippets")
    opts = options or TrainOptions()
    y = _labels(tensors)
    scaler = fit_scaler(tensors)
    config = {"options": asdict(opts)}
    config.update(extra_config or {})

    if name in ARCHITECTURES:
        spec = build_architecture(name)
        X = np.stack([scaler.apply(t.values) for t in tensors]).astype(np.float32)
        result = train(spec, X, y, epochs=opts.epochs, batch_size=opts.batch_size, seed=opts.seed)
        return TrainedModel(name, scaler, result.network, None, config, result.losses, result.learning_rates)

    X = np.stack([scaler.apply(t.values).reshape(-1) for t in tensors])
    k = opts.pca if opts.pca is not None else DEFAULT_PCA[name]
    if opts.pca is not None and name in ("rf", "extratrees"):
        log.warning("%s is normally fitted on raw features; applying PCA-%d as requested", name, k)
    pca = None
    if k:
        limit = min(X.shape)
        if k > limit:
            log.warning("PCA-%d exceeds min(n_samples, n_features) = %d; using %d", k, limit, limit)
            k = limit
        pca = pca_reduce.fit(X, k)
        X = pca_reduce.transform(pca, X)
    config["pca_components"] = k or 0

    if name in ENSEMBLES:
        preset = {"rf": tree_ensembles.random_forest_config, "extratrees": tree_ensembles.extra_trees_config,
                  "bagging": tree_ensembles.bagging_config}[name]
        model = tree_ensembles.fit_forest(X, y, preset(seed=opts.seed, n_jobs=opts.n_jobs))
    else:
        rounds = opts.rounds or DEFAULT_ROUNDS[name]
        model = boosting.fit_gb(X, y, rounds) if name == "gb" else boosting.fit_xgb(X, y, rounds)
    return TrainedModel(name, scaler, model, pca, config)
