"""Adam and learning-rate schedules."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import cos, pi

import numpy as np


@dataclass
class AdamState:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict, grads: dict, state: AdamState, lr: float) -> None:
    """Bias-corrected Adam update, applied to ``params`` in place."""
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for key, p in params.items():
        g = grads[key]
        if key not in state.m:
            state.m[key] = np.zeros_like(p)
            state.v[key] = np.zeros_like(p)
        m, v = state.m[key], state.v[key]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= (lr * (m / c1) / (np.sqrt(v / c2) + state.eps)).astype(p.dtype)


def lr_schedule(step: int, total_steps: int, kind: str = "constant",
                warmup_steps: int = 0, peak: float = 1e-3) -> float:
    """``constant`` or linear warm-up followed by half-cosine decay to zero."""
    if not 0 <= step <= total_steps:
        raise ValueError("step must lie in [0, total_steps]")
    if kind == "constant":
        return peak
    if kind != "warmup_cosine":
        raise ValueError(f"unknown schedule {kind!r}")
    if step < warmup_steps:
        return peak * step / warmup_steps
    span = total_steps - warmup_steps
    if span <= 0:
        return peak
    progress = (step - warmup_steps) / span
    return peak * 0.5 * (1.0 + cos(pi * progress))
