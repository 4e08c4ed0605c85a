"""Principal component analysis for flattened snippet vectors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class PCAModel:
    mean: np.ndarray                # (d,)
    components: np.ndarray          # (k, d), orthonormal rows
    explained_variance: np.ndarray  # (k,), non-increasing

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    @property
    def n_features(self) -> int:
        return self.mean.shape[0]


def _fix_signs(components: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(components.shape[0]), idx])
    signs[signs == 0] = 1.0
    return components * signs[:, None]


def _complete_basis(basis: np.ndarray, k: int, d: int) -> np.ndarray:
    """Extend ``r`` orthonormal rows to ``k`` with Gram-Schmidt on unit coordinate vectors."""
    rows = list(basis)
    j = 0
    while len(rows) < k:
        v = np.zeros(d)
        v[j] = 1.0
        j += 1
        for _ in range(2):  # second pass for numerical orthogonality
            for r in rows:
                v -= (r @ v) * r
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            rows.append(v / norm)
    return np.vstack(rows) if rows else np.zeros((0, d))


def fit(X: np.ndarray, k: int) -> PCAModel:
    """Top-``k`` principal directions of ``X`` (rows are samples).

    Uses the ``n x n`` Gram matrix when there are fewer samples than features.
    """
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    if n < 2:
        raise ValueError("PCA needs at least two samples")
    if not 1 <= k <= min(n, d):
        raise ValueError(f"k={k} outside [1, {min(n, d)}]")
    mean = X.mean(axis=0)
    Xc = X - mean
    if n < d:
        gram = Xc @ Xc.T
        evals, evecs = np.linalg.eigh(gram)
        order = np.argsort(evals)[::-1]
        evals = np.clip(evals[order], 0.0, None)
        evecs = evecs[:, order]
        sing = np.sqrt(evals)
    else:
        _, sing, vt = np.linalg.svd(Xc, full_matrices=False)
        evals = sing ** 2

    tol = max(n, d) * np.finfo(float).eps * (sing[0] if sing.size else 0.0)
    rank = int(np.sum(sing[:k] > tol))
    if n < d:
        comps = (evecs[:, :rank].T @ Xc) / sing[:rank, None]
        # re-orthonormalize against round-off accumulated through the Gram matrix
        if rank:
            q, _ = np.linalg.qr(comps.T)
            comps = np.sign(np.sum(q.T * comps, axis=1))[:, None] * q.T
    else:
        comps = vt[:rank]
    if rank < k:
        comps = _complete_basis(comps, k, d)
    comps = _fix_signs(comps)
    variance = np.zeros(k)
    variance[:rank] = evals[:rank] / (n - 1)
    return PCAModel(mean, comps, variance)


def transform(model: PCAModel, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.n_features:
        raise ConfigurationError(f"expected {model.n_features} features, got {X.shape[1]}")
    return (X - model.mean) @ model.components.T


def inverse_transform(model: PCAModel, Z: np.ndarray) -> np.ndarray:
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    if Z.shape[1] != model.n_components:
        raise ConfigurationError(f"expected {model.n_components} components, got {Z.shape[1]}")
    return Z @ model.components + model.mean


def to_arrays(model: PCAModel) -> dict[str, np.ndarray]:
    return {"pca.mean": model.mean, "pca.components": model.components,
            "pca.explained_variance": model.explained_variance}


def from_arrays(arrays: dict[str, np.ndarray]) -> PCAModel:
    return PCAModel(arrays["pca.mean"], arrays["pca.components"], arrays["pca.explained_variance"])
