"""NumPy 1-D convolutional networks with hand-written backpropagation."""

from .architectures import ARCHITECTURES, build_architecture
from .functional import conv_out_len, softmax, softmax_cross_entropy
from .network import Network, NetworkSpec, trace_shapes
from .optim import AdamState, adam_step, lr_schedule
from .training import TrainResult, accuracy, train

__all__ = [
    "ARCHITECTURES", "AdamState", "Network", "NetworkSpec", "TrainResult", "accuracy",
    "adam_step", "build_architecture", "conv_out_len", "lr_schedule", "softmax",
    "softmax_cross_entropy", "trace_shapes", "train",
]
