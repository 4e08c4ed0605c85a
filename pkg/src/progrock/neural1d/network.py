"""Layer objects and a sequential network built from a :class:`NetworkSpec`."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError
from . import functional as F


@dataclass
class NetworkSpec:
    """Ordered layer descriptors plus the per-sample input shape."""

    name: str
    layers: list[dict]
    input_shape: tuple[int, int] = (160, 216)
    training: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "layers": self.layers,
                "input_shape": list(self.input_shape), "training": self.training}

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkSpec":
        return cls(d["name"], [dict(l) for l in d["layers"]], tuple(d["input_shape"]), dict(d.get("training", {})))


def trace_shapes(spec: NetworkSpec) -> list[tuple[int, ...]]:
    """Per-sample output shape after every layer; raises on incompatibility."""
    shape: tuple[int, ...] = tuple(spec.input_shape)
    trace = []
    for layer in spec.layers:
        kind = layer["type"]
        if kind == "conv1d":
            if len(shape) != 2 or shape[0] != layer["in"]:
                raise ConfigurationError(f"conv1d expects {layer['in']} channels, got {shape}")
            length = F.conv_out_len(shape[1], layer["kernel"], layer["stride"],
                                    layer["padding"], layer["dilation"])
            shape = (layer["out"], length)
        elif kind == "batchnorm":
            if shape[0] != layer["channels"]:
                raise ConfigurationError(f"batchnorm over {layer['channels']} channels, got {shape}")
        elif kind == "flatten":
            shape = (int(np.prod(shape)),)
        elif kind == "linear":
            if len(shape) != 1 or shape[0] != layer["in"]:
                raise ConfigurationError(f"linear expects {layer['in']} inputs, got {shape}")
            shape = (layer["out"],)
        elif kind not in ("relu", "leaky_relu", "dropout"):
            raise ConfigurationError(f"unknown layer type {kind!r}")
        trace.append(shape)
    if trace and trace[-1] != (2,):
        raise ConfigurationError(f"network must end with 2 logits, ends with {trace[-1]}")
    return trace


class Layer:
    params: dict
    grads: dict
    buffers: dict

    def __init__(self):
        self.params, self.grads, self.buffers = {}, {}, {}
        self._cache = None

    def forward(self, x, training, rng):
        raise NotImplementedError

    def backward(self, dout):
        raise NotImplementedError


def _kaiming_uniform(rng, shape, fan_in, dtype):
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Conv1d(Layer):
    def __init__(self, cfg, rng, dtype):
        super().__init__()
        self.geom = (cfg["stride"], cfg["padding"], cfg["dilation"])
        fan_in = cfg["in"] * cfg["kernel"]
        self.params["weight"] = _kaiming_uniform(rng, (cfg["out"], cfg["in"], cfg["kernel"]), fan_in, dtype)
        self.params["bias"] = np.zeros(cfg["out"], dtype=dtype)

    def forward(self, x, training, rng):
        out, self._cache = F.conv1d_forward(x, self.params["weight"], self.params["bias"], *self.geom)
        return out

    def backward(self, dout):
        dx, self.grads["weight"], self.grads["bias"] = F.conv1d_backward(dout, self._cache)
        return dx


class BatchNorm1d(Layer):
    def __init__(self, cfg, rng, dtype):
        super().__init__()
        c = cfg["channels"]
        self.eps = cfg.get("eps", 1e-5)
        self.momentum = cfg.get("momentum", 0.1)
        self.params["gamma"] = np.ones(c, dtype=dtype)
        self.params["beta"] = np.zeros(c, dtype=dtype)
        self.buffers["running_mean"] = np.zeros(c, dtype=dtype)
        self.buffers["running_var"] = np.ones(c, dtype=dtype)

    def forward(self, x, training, rng):
        out, self._cache = F.batchnorm_forward(
            x, self.params["gamma"], self.params["beta"], self.buffers["running_mean"],
            self.buffers["running_var"], training, self.eps, self.momentum)
        return out

    def backward(self, dout):
        dx, self.grads["gamma"], self.grads["beta"] = F.batchnorm_backward(dout, self._cache)
        return dx


class ReLU(Layer):
    def forward(self, x, training, rng):
        out, self._cache = F.relu_forward(x)
        return out

    def backward(self, dout):
        return F.relu_backward(dout, self._cache)


class LeakyReLU(Layer):
    def __init__(self, slope=0.01):
        super().__init__()
        self.slope = slope

    def forward(self, x, training, rng):
        out, self._cache = F.leaky_relu_forward(x, self.slope)
        return out

    def backward(self, dout):
        return F.leaky_relu_backward(dout, self._cache)


class Dropout(Layer):
    def __init__(self, p):
        super().__init__()
        self.p = p

    def forward(self, x, training, rng):
        out, self._cache = F.dropout_forward(x, self.p, training, rng)
        return out

    def backward(self, dout):
        return F.dropout_backward(dout, self._cache)


class Flatten(Layer):
    def forward(self, x, training, rng):
        out, self._cache = F.flatten_forward(x)
        return out

    def backward(self, dout):
        return F.flatten_backward(dout, self._cache)


class Linear(Layer):
    def __init__(self, cfg, rng, dtype):
        super().__init__()
        self.params["weight"] = _kaiming_uniform(rng, (cfg["out"], cfg["in"]), cfg["in"], dtype)
        self.params["bias"] = np.zeros(cfg["out"], dtype=dtype)

    def forward(self, x, training, rng):
        out, self._cache = F.linear_forward(x, self.params["weight"], self.params["bias"])
        return out

    def backward(self, dout):
        dx, self.grads["weight"], self.grads["bias"] = F.linear_backward(dout, self._cache)
        return dx


def _make_layer(cfg, rng, dtype) -> Layer:
    kind = cfg["type"]
    if kind == "conv1d":
        return Conv1d(cfg, rng, dtype)
    if kind == "batchnorm":
        return BatchNorm1d(cfg, rng, dtype)
    if kind == "relu":
        return ReLU()
    if kind == "leaky_relu":
        return LeakyReLU(cfg.get("slope", 0.01))
    if kind == "dropout":
        return Dropout(cfg["p"])
    if kind == "flatten":
        return Flatten()
    if kind == "linear":
        return Linear(cfg, rng, dtype)
    raise ConfigurationError(f"unknown layer type {kind!r}")


class Network:
    def __init__(self, spec: NetworkSpec, seed: int = 0, dtype=np.float32):
        trace_shapes(spec)
        self.spec = spec
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng(seed)
        self.layers = [_make_layer(cfg, rng, self.dtype) for cfg in spec.layers]

    def forward(self, x, training=False, rng=None):
        x = np.asarray(x, dtype=self.dtype)
        if training and rng is None:
            rng = np.random.default_rng(0)
        for layer in self.layers:
            x = layer.forward(x, training, rng)
        return x

    def backward(self, dlogits):
        g = dlogits
        for layer in reversed(self.layers):
            g = layer.backward(g)
        return g

    def named_params(self):
        for i, layer in enumerate(self.layers):
            for name, value in layer.params.items():
                yield f"{i}.{name}", layer, name, value

    def param_dict(self) -> dict:
        return {key: value for key, _, _, value in self.named_params()}

    def grad_dict(self) -> dict:
        return {key: layer.grads[name] for key, layer, name, _ in self.named_params()}

    def predict_proba(self, X, batch_size: int = 64) -> np.ndarray:
        """Softmax class probabilities in inference mode."""
        X = np.asarray(X, dtype=self.dtype)
        out = [F.softmax(self.forward(X[i:i + batch_size]).astype(np.float64))
               for i in range(0, X.shape[0], batch_size)]
        return np.concatenate(out) if out else np.zeros((0, 2))

    # --- persistence: float32 arrays in layer order + JSON shape manifest

    def to_arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for i, layer in enumerate(self.layers):
            for name, value in list(layer.params.items()) + list(layer.buffers.items()):
                out[f"nn.{i}.{name}"] = np.asarray(value, dtype="<f4")
        return out

    def manifest(self) -> str:
        shapes = {k: list(v.shape) for k, v in self.to_arrays().items()}
        return json.dumps({"spec": self.spec.to_dict(), "shapes": shapes}, sort_keys=True)

    @classmethod
    def from_arrays(cls, spec: NetworkSpec, arrays: dict[str, np.ndarray]) -> "Network":
        net = cls(spec, seed=0, dtype=np.float32)
        for i, layer in enumerate(net.layers):
            for store in (layer.params, layer.buffers):
                for name in store:
                    key = f"nn.{i}.{name}"
                    if arrays[key].shape != store[name].shape:
                        raise ConfigurationError(f"{key}: shape {arrays[key].shape} != {store[name].shape}")
                    store[name] = np.array(arrays[key], dtype=np.float32)
        return net
