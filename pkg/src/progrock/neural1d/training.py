"""Mini-batch training loop."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .functional import softmax_cross_entropy
from .network import Network, NetworkSpec
from .optim import AdamState, adam_step, lr_schedule

log = logging.getLogger(__name__)


@dataclass
class TrainResult:
    network: Network
    losses: list[float]
    learning_rates: list[float]


def train(spec: NetworkSpec, X: np.ndarray, y: np.ndarray, epochs: int = 10,
          batch_size: int = 32, seed: int = 0, lr: float | None = None,
          schedule: str | None = None, warmup_epochs: int | None = None,
          on_epoch=None) -> TrainResult:
    """Train with Adam on shuffled mini-batches; returns the network in inference form.

    Schedule defaults come from ``spec.training``. Initialization, shuffling and
    dropout each draw from their own stream derived from ``seed``. ``on_epoch(epoch,
    network)`` runs after every epoch; a true return value stops training early.
    """
    if len(X) == 0:
        raise ValueError("cannot train on an empty dataset")
    X = np.asarray(X, dtype=np.float32)
    y = np.asarray(y, dtype=np.int64)
    opts = spec.training
    peak = lr if lr is not None else opts.get("lr", 1e-3)
    kind = schedule or opts.get("schedule", "constant")
    warm = warmup_epochs if warmup_epochs is not None else opts.get("warmup_epochs", 0)

    init_ss, shuffle_ss, drop_ss = np.random.SeedSequence(seed).spawn(3)
    net = Network(spec, seed=int(init_ss.generate_state(1)[0]), dtype=np.float32)
    shuffle_rng = np.random.default_rng(shuffle_ss)
    drop_rng = np.random.default_rng(drop_ss)

    n = X.shape[0]
    steps_per_epoch = -(-n // batch_size)
    total = epochs * steps_per_epoch
    warmup_steps = warm * steps_per_epoch
    state = AdamState()
    params = net.param_dict()
    losses, rates = [], []
    step = 0
    for epoch in range(epochs):
        order = shuffle_rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            logits = net.forward(X[idx], training=True, rng=drop_rng)
            loss, dlogits = softmax_cross_entropy(logits.astype(np.float64), y[idx])
            net.backward(dlogits.astype(np.float32))
            rate = lr_schedule(step, total, kind, warmup_steps, peak)
            adam_step(params, net.grad_dict(), state, rate)
            losses.append(loss)
            rates.append(rate)
            step += 1
        log.info("epoch %d/%d mean loss %.4f", epoch + 1, epochs,
                 float(np.mean(losses[-steps_per_epoch:])))
        if on_epoch is not None and on_epoch(epoch, net):
            break
    return TrainResult(net, losses, rates)


def accuracy(net: Network, X, y) -> float:
    p = net.predict_proba(X)
    return float(np.mean(p.argmax(axis=1) == np.asarray(y)))
