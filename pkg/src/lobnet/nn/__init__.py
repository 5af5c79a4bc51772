"""Minimal dense-tensor network kernel: exactly the layers the model needs,
with hand-derived reverse-mode gradients and ADAM."""

from .adam import AdamState, adam_init, adam_step
from .loss import softmax, softmax_xent
from .lstm import LstmSpec, lstm_backward, lstm_forward, lstm_init_params
from .ops import (
    conv2d_backward,
    conv2d_forward,
    leaky_relu,
    leaky_relu_backward,
    linear_backward,
    linear_forward,
    maxpool_time_backward,
    maxpool_time_forward,
    same_time_padding,
)
from .tensor import (
    DEFAULT_DTYPE,
    GRAD_CHECK_DTYPE,
    as_tensor,
    cast_params,
    check_finite,
    debug_checks_enabled,
    set_debug_checks,
)

__all__ = [
    "AdamState", "adam_init", "adam_step",
    "softmax", "softmax_xent",
    "LstmSpec", "lstm_backward", "lstm_forward", "lstm_init_params",
    "conv2d_backward", "conv2d_forward",
    "leaky_relu", "leaky_relu_backward",
    "linear_backward", "linear_forward",
    "maxpool_time_backward", "maxpool_time_forward", "same_time_padding",
    "DEFAULT_DTYPE", "GRAD_CHECK_DTYPE",
    "as_tensor", "cast_params", "check_finite",
    "debug_checks_enabled", "set_debug_checks",
]
