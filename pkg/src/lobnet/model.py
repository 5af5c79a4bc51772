"""The order-book movement classifier.

Three convolutional blocks squeeze the 40 feature columns down to one
descriptor per time step (pairing price with volume per level, then pairing
levels, then spanning all levels), an inception stage reads the resulting
sequence at several temporal scales in parallel, and an LSTM over the
concatenated branches feeds a 3-class softmax. Feature-axis reductions are
exact; time length is preserved everywhere, so the network maps
(N, 1, 100, 40) to (N, 3).

Layer plan for the default configuration (channels after each stage):

    input                (N,  1, 100, 40)
    block1: 1x2/(1,2) -> (N, 16, 100, 20), then two 4x1 convs (same in time)
    block2: 1x2/(1,2) -> (N, 16, 100, 10), then two 4x1 convs
    block3: 1x10      -> (N, 16, 100,  1), then two 4x1 convs
    inception: [1x1 -> 3x1] | [1x1 -> 5x1] | [maxpool3 -> 1x1], 32 each
                         (N, 96, 100,  1)
    lstm  96 -> 64, final hidden state
    dense 64 -> 3, softmax

Every convolution is followed by a leaky ReLU. The default build has exactly
60,691 trainable parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .nn import (
    DEFAULT_DTYPE,
    LstmSpec,
    conv2d_forward,
    leaky_relu,
    linear_backward,
    linear_forward,
    lstm_backward,
    lstm_forward,
    lstm_init_params,
    maxpool_time_backward,
    maxpool_time_forward,
    same_time_padding,
    softmax,
    softmax_xent,
)
from .nn.init import conv_weight, dense_weight, zeros
from .nn.ops import conv_core_backward, conv_core_forward, leaky_relu_backward_


@dataclass(frozen=True)
class ModelConfig:
    time_steps: int = 100
    features: int = 40
    conv_channels: int = 16
    inception_channels: int = 32
    lstm_hidden: int = 64
    leaky_slope: float = 0.01
    temporal_kernel: int = 4
    n_classes: int = 3

    def __post_init__(self):
        if min(self.conv_channels, self.inception_channels, self.lstm_hidden, self.n_classes) < 1:
            raise ValidationError("all widths must be >= 1")
        if self.features % 4 != 0 or self.features < 4:
            raise ValidationError(
                f"features must be a positive multiple of 4 for the stride plan, got {self.features}"
            )
        if self.temporal_kernel < 1 or self.time_steps < self.temporal_kernel:
            raise ValidationError("temporal kernel must fit within the window")

    @property
    def span_kernel(self) -> int:
        # width of the all-levels convolution after two halvings of 40 -> 10
        return self.features // 4

    @property
    def lstm_input(self) -> int:
        return 3 * self.inception_channels


def _conv_steps(cfg: ModelConfig):
    """(name, stride, time padding) for the trunk, in forward order."""
    tpad = same_time_padding(cfg.temporal_kernel)
    steps = []
    for block in ("b1", "b2"):
        steps.append((f"{block}_pair", (1, 2), (0, 0)))
        steps.append((f"{block}_t1", (1, 1), tpad))
        steps.append((f"{block}_t2", (1, 1), tpad))
    steps.append(("b3_span", (1, 1), (0, 0)))
    steps.append(("b3_t1", (1, 1), tpad))
    steps.append(("b3_t2", (1, 1), tpad))
    return steps


def build(cfg: ModelConfig, seed: int, dtype=DEFAULT_DTYPE) -> dict[str, np.ndarray]:
    """Seeded deterministic initialisation of all trainable tensors."""
    rng = np.random.default_rng(seed)
    cc, ic = cfg.conv_channels, cfg.inception_channels
    params: dict[str, np.ndarray] = {}

    def conv(name, out_c, in_c, kt, kf):
        params[f"{name}_w"] = conv_weight(out_c, in_c, kt, kf, rng, dtype)
        params[f"{name}_b"] = zeros(out_c, dtype)

    tk = cfg.temporal_kernel
    conv("b1_pair", cc, 1, 1, 2)
    conv("b1_t1", cc, cc, tk, 1)
    conv("b1_t2", cc, cc, tk, 1)
    conv("b2_pair", cc, cc, 1, 2)
    conv("b2_t1", cc, cc, tk, 1)
    conv("b2_t2", cc, cc, tk, 1)
    conv("b3_span", cc, cc, 1, cfg.span_kernel)
    conv("b3_t1", cc, cc, tk, 1)
    conv("b3_t2", cc, cc, tk, 1)
    conv("inc_a_red", ic, cc, 1, 1)
    conv("inc_a_conv", ic, ic, 3, 1)
    conv("inc_b_red", ic, cc, 1, 1)
    conv("inc_b_conv", ic, ic, 5, 1)
    conv("inc_c_conv", ic, cc, 1, 1)
    params.update(lstm_init_params(LstmSpec(cfg.lstm_input, cfg.lstm_hidden), rng, dtype, prefix="lstm_"))
    params["head_w"] = dense_weight(cfg.lstm_hidden, cfg.n_classes, rng, dtype)
    params["head_b"] = zeros(cfg.n_classes, dtype)
    return params


def parameter_count(params: dict[str, np.ndarray]) -> int:
    return int(sum(p.size for p in params.values()))


def _check_input(x: np.ndarray, cfg: ModelConfig) -> None:
    if x.ndim != 4 or x.shape[1] != 1 or x.shape[2:] != (cfg.time_steps, cfg.features):
        raise ValidationError(
            f"expected input (N, 1, {cfg.time_steps}, {cfg.features}), got {x.shape}"
        )


def _forward(params: dict[str, np.ndarray], x: np.ndarray, cfg: ModelConfig, keep: bool):
    """Shared forward pass; ``keep`` retains every intermediate for backward.

    The conv stack runs channels-first, (C, N, T, F), so each pass is a
    single GEMM over a block-copied patch matrix; see nn.ops.
    """
    _check_input(x, cfg)
    slope = cfg.leaky_slope
    cache: dict[str, object] = {}

    def conv_act(name, inp, stride, pad_t):
        z, cols = conv_core_forward(
            inp, params[f"{name}_w"], params[f"{name}_b"], stride, pad_t
        )
        act = leaky_relu(z, slope)
        if keep:
            cache[name] = (cols, act, inp.shape)
        return act

    h = x.transpose(1, 0, 2, 3)  # (1, N, T, F) view of the same buffer
    for name, stride, pad_t in _conv_steps(cfg):
        h = conv_act(name, h, stride, pad_t)
    trunk = h  # (C, N, T, 1)

    a = conv_act("inc_a_red", trunk, (1, 1), (0, 0))
    a = conv_act("inc_a_conv", a, (1, 1), same_time_padding(3))
    b = conv_act("inc_b_red", trunk, (1, 1), (0, 0))
    b = conv_act("inc_b_conv", b, (1, 1), same_time_padding(5))
    pooled, arg = maxpool_time_forward(trunk, window=3)
    if keep:
        cache["pool_arg"] = arg
    c = conv_act("inc_c_conv", pooled, (1, 1), (0, 0))
    merged = np.concatenate([a, b, c], axis=0)  # (3*ic, N, T, 1)

    seq = np.ascontiguousarray(merged[:, :, :, 0].transpose(1, 2, 0))  # (N, T, 3*ic)
    h_seq, lstm_cache = lstm_forward(seq, params, LstmSpec(cfg.lstm_input, cfg.lstm_hidden), prefix="lstm_")
    h_last = h_seq[:, -1]
    logits = linear_forward(h_last, params["head_w"], params["head_b"])
    if keep:
        cache["lstm"] = lstm_cache
        cache["h_last"] = h_last
    return logits, cache


def forward(params: dict[str, np.ndarray], x: np.ndarray, cfg: ModelConfig) -> np.ndarray:
    """Class probabilities (N, 3) for a batch of windows (N, 1, T, F)."""
    logits, _ = _forward(params, x, cfg, keep=False)
    return softmax(logits)


def predict_proba(
    params: dict[str, np.ndarray], x: np.ndarray, cfg: ModelConfig, batch_size: int = 256
) -> np.ndarray:
    """Batched inference over a large window array."""
    outs = [forward(params, x[i : i + batch_size], cfg) for i in range(0, x.shape[0], batch_size)]
    return np.concatenate(outs, axis=0) if outs else np.empty((0, cfg.n_classes))


def forward_trace(params: dict[str, np.ndarray], x: np.ndarray, cfg: ModelConfig) -> dict[str, np.ndarray]:
    """Named intermediate activations, for inspection and shape tests."""
    _check_input(x, cfg)
    slope = cfg.leaky_slope
    trace: dict[str, np.ndarray] = {"input": x}
    h = x
    for name, stride, pad_t in _conv_steps(cfg):
        h = leaky_relu(conv2d_forward(h, params[f"{name}_w"], params[f"{name}_b"], stride, pad_t), slope)
        trace[name] = h
    trunk = h
    a = leaky_relu(conv2d_forward(trunk, params["inc_a_red_w"], params["inc_a_red_b"]), slope)
    a = leaky_relu(conv2d_forward(a, params["inc_a_conv_w"], params["inc_a_conv_b"], (1, 1), same_time_padding(3)), slope)
    b = leaky_relu(conv2d_forward(trunk, params["inc_b_red_w"], params["inc_b_red_b"]), slope)
    b = leaky_relu(conv2d_forward(b, params["inc_b_conv_w"], params["inc_b_conv_b"], (1, 1), same_time_padding(5)), slope)
    pooled, _ = maxpool_time_forward(trunk, window=3)
    c = leaky_relu(conv2d_forward(pooled, params["inc_c_conv_w"], params["inc_c_conv_b"]), slope)
    merged = np.concatenate([a, b, c], axis=1)
    trace["inception"] = merged
    seq = np.ascontiguousarray(merged[:, :, :, 0].transpose(0, 2, 1))
    h_seq, _ = lstm_forward(seq, params, LstmSpec(cfg.lstm_input, cfg.lstm_hidden), prefix="lstm_")
    trace["lstm"] = h_seq
    logits = linear_forward(h_seq[:, -1], params["head_w"], params["head_b"])
    trace["logits"] = logits
    trace["probs"] = softmax(logits)
    return trace


def loss_and_grads(
    params: dict[str, np.ndarray], x: np.ndarray, targets: np.ndarray, cfg: ModelConfig
) -> tuple[float, np.ndarray, dict[str, np.ndarray]]:
    """Mean cross-entropy and gradients for every parameter tensor."""
    logits, cache = _forward(params, x, cfg, keep=True)
    loss, probs, grad_logits = softmax_xent(logits, targets)
    grads: dict[str, np.ndarray] = {}
    slope = cfg.leaky_slope

    dh_last, grads["head_w"], grads["head_b"] = linear_backward(
        cache["h_last"], params["head_w"], grad_logits
    )
    lstm_cache = cache["lstm"]
    n, t_len, _ = lstm_cache["x"].shape
    grad_h_seq = np.zeros((n, t_len, cfg.lstm_hidden), dtype=dh_last.dtype)
    grad_h_seq[:, -1] = dh_last
    dseq, lstm_grads = lstm_backward(
        grad_h_seq, lstm_cache, params, LstmSpec(cfg.lstm_input, cfg.lstm_hidden), prefix="lstm_"
    )
    grads.update(lstm_grads)

    dmerged = np.ascontiguousarray(dseq.transpose(2, 0, 1))[:, :, :, None]  # (3*ic, N, T, 1)
    ic = cfg.inception_channels
    da, db, dc = dmerged[:ic], dmerged[ic : 2 * ic], dmerged[2 * ic :]

    def conv_back(name, grad_act, stride=(1, 1), pad_t=(0, 0), need_dx=True):
        cols, act, in_shape = cache[name]
        dz = leaky_relu_backward_(np.ascontiguousarray(grad_act), act, slope)
        dx, grads[f"{name}_w"], grads[f"{name}_b"] = conv_core_backward(
            cols, params[f"{name}_w"], dz, in_shape, stride, pad_t, need_dx=need_dx
        )
        return dx

    da = conv_back("inc_a_conv", da, pad_t=same_time_padding(3))
    dtrunk = conv_back("inc_a_red", da)
    db = conv_back("inc_b_conv", db, pad_t=same_time_padding(5))
    dtrunk += conv_back("inc_b_red", db)
    dpooled = conv_back("inc_c_conv", dc)
    dtrunk += maxpool_time_backward(dpooled, cache["pool_arg"], window=3)

    steps = _conv_steps(cfg)
    grad = dtrunk
    for pos, (name, stride, pad_t) in enumerate(reversed(steps)):
        # the input gradient of the first layer is never consumed
        grad = conv_back(name, grad, stride, pad_t, need_dx=pos < len(steps) - 1)
    return loss, probs, grads
