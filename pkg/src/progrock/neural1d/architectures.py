"""Named network layouts: the baseline, table models 1-4, Zuck and Satya."""

from __future__ import annotations

from ..errors import ConfigurationError
from .network import NetworkSpec

ARCHITECTURES = ("baseline", "model1", "model2", "model3", "model4", "zuck", "satya")


def conv(c_in, c_out, kernel=3, stride=1, padding=1, dilation=1) -> dict:
    return {"type": "conv1d", "in": c_in, "out": c_out, "kernel": kernel,
            "stride": stride, "padding": padding, "dilation": dilation}


def linear(n_in, n_out) -> dict:
    return {"type": "linear", "in": n_in, "out": n_out}


def _head(n_in, hidden, act, dropout=None) -> list[dict]:
    layers = [{"type": "flatten"}]
    widths = [n_in] + list(hidden)
    for a, b in zip(widths[:-1], widths[1:]):
        layers += [linear(a, b), dict(act)]
        if dropout:
            layers.append({"type": "dropout", "p": dropout})
    layers.append(linear(widths[-1], 2))
    return layers


def _table_model(hidden, act, batchnorm=False) -> list[dict]:
    chans = [160, 32, 64, 128, 256, 128, 64]
    layers = []
    for a, b in zip(chans[:-1], chans[1:]):
        layers.append(conv(a, b))
        if batchnorm:
            layers.append({"type": "batchnorm", "channels": b})
        layers.append(dict(act))
    return layers + _head(64 * 216, hidden, act)


def build_architecture(name: str) -> NetworkSpec:
    relu = {"type": "relu"}
    leaky = {"type": "leaky_relu", "slope": 0.01}
    constant = {"schedule": "constant", "lr": 1e-3}

    if name == "baseline":
        layers = []
        for a, b in ((160, 256), (256, 512), (512, 512)):
            layers += [conv(a, b), dict(relu)]
        layers += _head(512 * 216, (100, 10), relu)
        return NetworkSpec(name, layers, training=constant)

    if name in ("model1", "model3", "model4"):
        act = leaky if name == "model4" else relu
        return NetworkSpec(name, _table_model((100, 10), act, batchnorm=name == "model3"), training=constant)
    if name == "model2":
        return NetworkSpec(name, _table_model((100, 50, 10), relu), training=constant)

    if name == "zuck":
        plan = [conv(160, 320, 3, 1, 1), conv(320, 280, 5, 2, 1), conv(280, 240, 5, 2, 1),
                conv(240, 200, 5, 2, 1), conv(200, 180, 3, 1, 1)]
        layers = []
        for c in plan:
            layers += [c, {"type": "batchnorm", "channels": c["out"]}, dict(relu),
                       {"type": "dropout", "p": 0.25}]
        layers += _head(180 * 26, (100, 10), relu, dropout=0.25)
        return NetworkSpec(name, layers, training=constant)

    if name == "satya":
        plan = [conv(128 if i else 160, 128, *geom) for i, geom in enumerate(
            [(3, 1, 1, 1), (5, 2, 1, 1), (3, 1, 2, 2), (5, 2, 1, 1), (3, 1, 1, 1)])]
        layers = []
        for c in plan:
            layers += [c, dict(relu), {"type": "dropout", "p": 0.2}]
        layers += _head(128 * 53, (100, 10), relu, dropout=0.2)
        return NetworkSpec(name, layers, training={"schedule": "warmup_cosine", "lr": 1e-3,
                                                   "warmup_epochs": 2})

    raise ConfigurationError(f"unknown architecture {name!r}; choose from {', '.join(ARCHITECTURES)}")
