"""Minimal dense/convolutional network engine with explicit backprop and Adam.

Hosts the two radar-to-comm translation networks: a fully convolutional
encoder-decoder mapping log spectra to log spectra, and a fully connected
network mapping 2-channel covariance first columns to columns trained through
the Toeplitz-embedding spectrum loss. Everything is float64 numpy; gradients
are hand-derived and checked against central finite differences.
"""

import math
from dataclasses import dataclass

import numpy as np

from .covariance import ToeplitzColumn
from .spectrum import LOG_DB, Aps, DftGrid, aps_linear_map, dft_grid


class DivergedLossError(RuntimeError):
    """Raised when the training loss stops being finite."""


@dataclass
class LayerSpec:
    """One layer of a sequential network; fields beyond `kind` apply per kind."""

    kind: str
    in_channels: int = 0
    out_channels: int = 0
    kernel_size: int = 0
    padding: int = 0
    factor: int = 0
    in_dim: int = 0
    out_dim: int = 0
    negative_slope: float = 0.0

    KINDS = ("conv1d", "max_pool1d", "up_sample1d", "fully_connected", "leaky_relu", "tanh")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown layer kind {self.kind!r}")

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "conv1d":
            d.update(in_channels=self.in_channels, out_channels=self.out_channels,
                     kernel_size=self.kernel_size, padding=self.padding)
        elif self.kind in ("max_pool1d", "up_sample1d"):
            d.update(factor=self.factor)
        elif self.kind == "fully_connected":
            d.update(in_dim=self.in_dim, out_dim=self.out_dim)
        elif self.kind == "leaky_relu":
            d.update(negative_slope=self.negative_slope)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LayerSpec":
        return cls(**d)


def conv1d(in_channels, out_channels, kernel_size, padding):
    return LayerSpec("conv1d", in_channels=in_channels, out_channels=out_channels,
                     kernel_size=kernel_size, padding=padding)


def max_pool1d(factor):
    return LayerSpec("max_pool1d", factor=factor)


def up_sample1d(factor):
    return LayerSpec("up_sample1d", factor=factor)


def fully_connected(in_dim, out_dim):
    return LayerSpec("fully_connected", in_dim=in_dim, out_dim=out_dim)


def leaky_relu(negative_slope=0.1):
    return LayerSpec("leaky_relu", negative_slope=negative_slope)


def tanh():
    return LayerSpec("tanh")


def aps_net_layers(n: int) -> list:
    """Fully convolutional encoder-decoder for length-n spectra (n divisible by 4)."""
    return [
        conv1d(1, 16, 5, 2), leaky_relu(0.1), max_pool1d(2),
        conv1d(16, 32, 5, 2), leaky_relu(0.1), max_pool1d(2),
        conv1d(32, 32, 3, 1), leaky_relu(0.1), up_sample1d(2),
        conv1d(32, 16, 3, 1), leaky_relu(0.1), up_sample1d(2),
        conv1d(16, 1, 3, 1),
    ]


def col_net_layers(n: int) -> list:
    """Three hidden fully connected layers with tanh for 2-channel length-n columns."""
    return [
        fully_connected(2 * n, 4 * n), tanh(),
        fully_connected(4 * n, 4 * n), tanh(),
        fully_connected(4 * n, 4 * n), tanh(),
        fully_connected(4 * n, 2 * n),
    ]


def output_shape(layers: list, in_shape: tuple) -> tuple:
    """Walk the layer chain validating shape compatibility; returns the final shape
    (without the batch axis)."""
    shape = tuple(in_shape)
    for i, spec in enumerate(layers):
        if spec.kind == "conv1d":
            if len(shape) != 2 or shape[0] != spec.in_channels:
                raise ValueError(f"layer {i}: conv1d expects ({spec.in_channels}, W), got {shape}")
            w = shape[1] + 2 * spec.padding - spec.kernel_size + 1
            if w < 1:
                raise ValueError(f"layer {i}: kernel wider than padded input")
            shape = (spec.out_channels, w)
        elif spec.kind == "max_pool1d":
            if len(shape) != 2 or shape[1] % spec.factor != 0:
                raise ValueError(f"layer {i}: width {shape} not divisible by pool factor {spec.factor}")
            shape = (shape[0], shape[1] // spec.factor)
        elif spec.kind == "up_sample1d":
            if len(shape) != 2:
                raise ValueError(f"layer {i}: up_sample1d expects (C, W), got {shape}")
            shape = (shape[0], shape[1] * spec.factor)
        elif spec.kind == "fully_connected":
            if len(shape) != 1 or shape[0] != spec.in_dim:
                raise ValueError(f"layer {i}: fully_connected expects ({spec.in_dim},), got {shape}")
            shape = (spec.out_dim,)
        # activations keep the shape
    return shape


def init_layer_params(spec: LayerSpec, rng: np.random.Generator) -> dict:
    """Glorot-uniform weights, zero biases; activation and pooling layers are empty."""
    if spec.kind == "conv1d":
        fan_in = spec.in_channels * spec.kernel_size
        fan_out = spec.out_channels * spec.kernel_size
        a = math.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-a, a, size=(spec.out_channels, spec.in_channels, spec.kernel_size))
        return {"w": w, "b": np.zeros(spec.out_channels)}
    if spec.kind == "fully_connected":
        a = math.sqrt(6.0 / (spec.in_dim + spec.out_dim))
        w = rng.uniform(-a, a, size=(spec.out_dim, spec.in_dim))
        return {"w": w, "b": np.zeros(spec.out_dim)}
    return {}


def _conv_windows(x_pad: np.ndarray, k: int) -> np.ndarray:
    # (B, C, Wp) -> (B, Wo, C*k) ready for a GEMM against the (O, C*k) kernel
    v = np.lib.stride_tricks.sliding_window_view(x_pad, k, axis=2)  # (B, C, Wo, k)
    b, c, wo, _ = v.shape
    return np.ascontiguousarray(v.transpose(0, 2, 1, 3)).reshape(b, wo, c * k)


def layer_forward(spec: LayerSpec, params: dict, x: np.ndarray):
    """Forward pass on a batch-first array; returns (output, cache for backward)."""
    if spec.kind == "conv1d":
        if x.ndim != 3 or x.shape[1] != spec.in_channels:
            raise ValueError(f"conv1d expects (B, {spec.in_channels}, W), got {x.shape}")
        pad = spec.padding
        x_pad = np.pad(x, ((0, 0), (0, 0), (pad, pad))) if pad else x
        win = _conv_windows(x_pad, spec.kernel_size)  # (B, Wo, C*k)
        wmat = params["w"].reshape(spec.out_channels, -1)  # (O, C*k)
        y = win @ wmat.T + params["b"]  # (B, Wo, O)
        return y.transpose(0, 2, 1), {"win": win, "in_width": x.shape[2]}
    if spec.kind == "max_pool1d":
        b, c, w = x.shape
        if w % spec.factor:
            raise ValueError(f"width {w} not divisible by pool factor {spec.factor}")
        xr = x.reshape(b, c, w // spec.factor, spec.factor)
        idx = np.argmax(xr, axis=3)  # first maximum wins on ties
        return np.take_along_axis(xr, idx[..., None], axis=3)[..., 0], {"idx": idx, "shape": xr.shape}
    if spec.kind == "up_sample1d":
        return np.repeat(x, spec.factor, axis=2), {}
    if spec.kind == "fully_connected":
        if x.ndim != 2 or x.shape[1] != spec.in_dim:
            raise ValueError(f"fully_connected expects (B, {spec.in_dim}), got {x.shape}")
        return x @ params["w"].T + params["b"], {"x": x}
    if spec.kind == "leaky_relu":
        mask = x >= 0
        return np.where(mask, x, spec.negative_slope * x), {"mask": mask}
    if spec.kind == "tanh":
        y = np.tanh(x)
        return y, {"y": y}
    raise ValueError(spec.kind)


def layer_backward(spec: LayerSpec, params: dict, cache: dict, grad_out: np.ndarray):
    """Exact gradients of layer_forward; returns (grad_in, grad_params)."""
    if spec.kind == "conv1d":
        win = cache["win"]  # (B, Wo, C*k)
        g = grad_out.transpose(0, 2, 1)  # (B, Wo, O)
        grad_w = np.tensordot(g, win, axes=([0, 1], [0, 1])).reshape(params["w"].shape)
        grad_b = g.sum(axis=(0, 1))
        # full correlation of grad_out with the flipped kernel recovers grad wrt
        # the padded input; then crop the padding
        k, pad = spec.kernel_size, spec.padding
        g_pad = np.pad(grad_out, ((0, 0), (0, 0), (k - 1, k - 1)))
        gwin = _conv_windows(g_pad, k)  # (B, Wp, O*k)
        wflip = params["w"][:, :, ::-1]  # (O, C, k)
        wmat = np.ascontiguousarray(wflip.transpose(0, 2, 1)).reshape(-1, spec.in_channels)
        grad_xpad = gwin @ wmat  # (B, Wp, C)
        grad_xpad = grad_xpad.transpose(0, 2, 1)
        grad_in = grad_xpad[:, :, pad:pad + cache["in_width"]] if pad else grad_xpad
        return grad_in, {"w": grad_w, "b": grad_b}
    if spec.kind == "max_pool1d":
        gxr = np.zeros(cache["shape"])
        np.put_along_axis(gxr, cache["idx"][..., None], grad_out[..., None], axis=3)
        b, c, wo, f = cache["shape"]
        return gxr.reshape(b, c, wo * f), {}
    if spec.kind == "up_sample1d":
        b, c, w = grad_out.shape
        return grad_out.reshape(b, c, w // spec.factor, spec.factor).sum(axis=3), {}
    if spec.kind == "fully_connected":
        x = cache["x"]
        return grad_out @ params["w"], {"w": grad_out.T @ x, "b": grad_out.sum(axis=0)}
    if spec.kind == "leaky_relu":
        return np.where(cache["mask"], grad_out, spec.negative_slope * grad_out), {}
    if spec.kind == "tanh":
        return grad_out * (1.0 - cache["y"] ** 2), {}
    raise ValueError(spec.kind)


@dataclass
class NetworkParams:
    """All weights of one network plus the input normalizer it was trained with."""

    model: str  # "aps" or "col"
    layers: list
    tensors: dict  # "layer{i}.w" / "layer{i}.b" -> ndarray
    normalizer: float = 1.0

    def layer_params(self, i: int) -> dict:
        out = {}
        for key in ("w", "b"):
            name = f"layer{i}.{key}"
            if name in self.tensors:
                out[key] = self.tensors[name]
        return out


def init_network(model: str, n: int, rng: np.random.Generator) -> NetworkParams:
    if model == "aps":
        layers = aps_net_layers(n)
        output_shape(layers, (1, n))
    elif model == "col":
        layers = col_net_layers(n)
        output_shape(layers, (2 * n,))
    else:
        raise ValueError(f"unknown model {model!r}")
    tensors = {}
    for i, spec in enumerate(layers):
        for key, value in init_layer_params(spec, rng).items():
            tensors[f"layer{i}.{key}"] = value
    # aps models anchor their log-scale normalization at the floor; col models
    # store a max-abs input scale (filled in by train)
    normalizer = -80.0 if model == "aps" else 1.0
    return NetworkParams(model=model, layers=layers, tensors=tensors, normalizer=normalizer)


def network_forward(net: NetworkParams, x: np.ndarray, keep_caches: bool = False):
    caches = [] if keep_caches else None
    for i, spec in enumerate(net.layers):
        x, cache = layer_forward(spec, net.layer_params(i), x)
        if keep_caches:
            caches.append(cache)
    return (x, caches) if keep_caches else x


def network_backward(net: NetworkParams, caches: list, grad_out: np.ndarray) -> dict:
    grads = {}
    g = grad_out
    for i in range(len(net.layers) - 1, -1, -1):
        spec = net.layers[i]
        g, gp = layer_backward(spec, net.layer_params(i), caches[i], g)
        for key, value in gp.items():
            grads[f"layer{i}.{key}"] = value
    return grads


def mse_loss(pred: np.ndarray, target: np.ndarray):
    """Mean squared error over all elements and its gradient wrt pred."""
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    return float(np.mean(diff ** 2)), 2.0 * diff / diff.size


def two_channel(col: np.ndarray) -> np.ndarray:
    """Complex column -> stacked [Re; Im] real vector."""
    col = np.asarray(col)
    return np.concatenate([col.real, col.imag], axis=-1)


def from_two_channel(vec: np.ndarray) -> np.ndarray:
    """Stacked [Re; Im] -> complex column; the imaginary part of entry 0 is
    dropped (diagonal of a Hermitian matrix is real)."""
    n = vec.shape[-1] // 2
    col = vec[..., :n] + 1j * vec[..., n:]
    col[..., 0] = col[..., 0].real
    return col


def col_aps_loss_batch(pred2ch: np.ndarray, target_aps: np.ndarray, m: np.ndarray):
    """Spectrum-domain column loss on a batch.

    loss = mean over samples of ||M r - d||^2 / N where M is the linear map from
    2-channel columns to the spectrum of their Toeplitz embedding. Returns
    (loss, grad wrt pred2ch).
    """
    d_hat = pred2ch @ m.T  # (B, N)
    diff = d_hat - target_aps
    batch = pred2ch.shape[0]
    n = target_aps.shape[-1]
    loss = float(np.sum(diff ** 2)) / (batch * n)
    grad = (2.0 / (batch * n)) * diff @ m
    return loss, grad


def col_aps_loss(r_hat: ToeplitzColumn, d_c: Aps, grid: DftGrid):
    """Single-column form of the spectrum-domain loss: ||aps(T(r)) - d||^2 / N and
    the gradient wrt the 2-channel representation of r."""
    if d_c.scale != "linear":
        raise ValueError("target spectrum must be linear scale")
    m = aps_linear_map(grid)
    vec = two_channel(r_hat.col)[None, :]
    loss, grad = col_aps_loss_batch(vec, d_c.values[None, :], m)
    return loss, grad[0]


@dataclass
class TrainConfig:
    batch_size: int = 64
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    max_epochs: int = 1000
    patience: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1 or self.patience < 1 or self.max_epochs < 1:
            raise ValueError("batch_size, patience and max_epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if not (0 <= self.adam_beta1 < 1 and 0 <= self.adam_beta2 < 1):
            raise ValueError("betas must be in [0, 1)")


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0

    @classmethod
    def for_params(cls, tensors: dict) -> "AdamState":
        return cls(m={k: np.zeros_like(v) for k, v in tensors.items()},
                   v={k: np.zeros_like(v) for k, v in tensors.items()})


def adam_step(tensors: dict, grads: dict, state: AdamState, cfg: TrainConfig):
    """One bias-corrected Adam update, in place on the tensors; returns (tensors, state)."""
    state.t += 1
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for name, g in grads.items():
        state.m[name] = b1 * state.m[name] + (1.0 - b1) * g
        state.v[name] = b2 * state.v[name] + (1.0 - b2) * g * g
        m_hat = state.m[name] / c1
        v_hat = state.v[name] / c2
        tensors[name] -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
    return tensors, state


def aps_normalize(values_db: np.ndarray, floor_db: float) -> np.ndarray:
    """Affine map taking the log-spectrum floor to 0 and 0 dB to 1.

    The convolutions zero-pad beyond the array edge; on this scale the pad
    value reads as "no power" instead of a phantom mid-power bin, which
    otherwise distorts predictions at the outermost bins.
    """
    return (values_db - floor_db) / (-floor_db)


def aps_denormalize(values: np.ndarray, floor_db: float) -> np.ndarray:
    return values * (-floor_db) + floor_db


def _aps_batch_loss(net, x, y, with_grads):
    pred, caches = network_forward(net, x[:, None, :], keep_caches=True)
    loss, grad = mse_loss(pred, y[:, None, :])
    if not with_grads:
        return loss, None
    return loss, network_backward(net, caches, grad)


def _col_batch_loss(net, x, y, m, with_grads):
    # x is normalized; predictions are scaled back to physical units by the
    # normalizer before the spectrum loss, so its gradient carries the factor
    pred, caches = network_forward(net, x, keep_caches=True)
    loss, grad = col_aps_loss_batch(pred * net.normalizer, y, m)
    if not with_grads:
        return loss, None
    return loss, network_backward(net, caches, grad * net.normalizer)


def train(model: str, train_set: tuple, val_set: tuple, cfg: TrainConfig,
          rng: np.random.Generator = None, grid: DftGrid = None,
          aps_floor_db: float = -80.0):
    """Mini-batch Adam training with early stopping on the validation loss.

    model "aps": train_set = (log radar spectra, log comm spectra), both (B, N);
    spectra are rescaled so the log floor maps to 0, and the floor is stored on
    the returned params (losses in the history are in rescaled units).
    model "col": train_set = (2-channel radar columns, linear comm spectra),
    shapes (B, 2N) and (B, N); inputs are max-abs normalized to [-1, 1] and the
    scale is stored on the returned params.

    Returns (params at the best validation loss, history of per-epoch dicts).
    """
    x_train, y_train = (np.asarray(a, dtype=np.float64) for a in train_set)
    x_val, y_val = (np.asarray(a, dtype=np.float64) for a in val_set)
    if len(x_train) == 0 or len(x_val) == 0:
        raise ValueError("train and validation sets must be nonempty")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)

    if model == "aps":
        n = x_train.shape[1]
        net = init_network("aps", n, rng)
        net.normalizer = float(aps_floor_db)
        x_train = aps_normalize(x_train, aps_floor_db)
        y_train = aps_normalize(y_train, aps_floor_db)
        x_val = aps_normalize(x_val, aps_floor_db)
        y_val = aps_normalize(y_val, aps_floor_db)
        batch_loss = lambda xb, yb, g: _aps_batch_loss(net, xb, yb, g)
    elif model == "col":
        n = x_train.shape[1] // 2
        net = init_network("col", n, rng)
        net.normalizer = max(float(np.abs(x_train).max()), 1e-30)
        x_train = x_train / net.normalizer
        x_val = x_val / net.normalizer
        m = aps_linear_map(grid if grid is not None else dft_grid(n))
        batch_loss = lambda xb, yb, g: _col_batch_loss(net, xb, yb, m, g)
    else:
        raise ValueError(f"unknown model {model!r}")

    state = AdamState.for_params(net.tensors)
    history = []
    best_val = np.inf
    best_tensors = {k: v.copy() for k, v in net.tensors.items()}
    epochs_since_best = 0
    num_train = len(x_train)

    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(num_train)
        total = 0.0
        for start in range(0, num_train, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            loss, grads = batch_loss(x_train[idx], y_train[idx], True)
            if not np.isfinite(loss):
                raise DivergedLossError(f"training loss became {loss} at epoch {epoch}")
            adam_step(net.tensors, grads, state, cfg)
            total += loss * len(idx)
        train_loss = total / num_train
        val_loss, _ = batch_loss(x_val, y_val, False)
        if not np.isfinite(val_loss):
            raise DivergedLossError(f"validation loss became {val_loss} at epoch {epoch}")
        history.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss})
        if val_loss < best_val:
            best_val = val_loss
            best_tensors = {k: v.copy() for k, v in net.tensors.items()}
            epochs_since_best = 0
        else:
            epochs_since_best += 1
            if epochs_since_best >= cfg.patience:
                break

    net.tensors = best_tensors
    return net, history


def aps_net_apply(net: NetworkParams, d_r_log: Aps) -> Aps:
    """Predicted comm spectrum (log scale) from a radar spectrum (log scale)."""
    if net.model != "aps":
        raise ValueError("params are not an aps model")
    if d_r_log.scale != LOG_DB:
        raise ValueError("input spectrum must be log scale")
    floor_db = net.normalizer
    x = aps_normalize(d_r_log.values, floor_db)[None, None, :]
    out = aps_denormalize(network_forward(net, x)[0, 0], floor_db)
    return Aps(out, LOG_DB)


def col_net_apply(net: NetworkParams, r_r: ToeplitzColumn) -> ToeplitzColumn:
    """Predicted comm covariance column from a radar covariance column."""
    if net.model != "col":
        raise ValueError("params are not a col model")
    x = two_channel(r_r.col)[None, :] / net.normalizer
    out = network_forward(net, x) * net.normalizer
    return ToeplitzColumn(from_two_channel(out[0]))


def grad_check(model: str, sample: tuple, eps: float = 1e-5, num_params: int = 200,
               seed: int = 0, grid: DftGrid = None) -> float:
    """Max relative error between backprop and central differences on the full loss.

    Checks a random subset of at least `num_params` parameters of a freshly
    initialized network on one (input, target) pair.
    """
    if not 1e-7 <= eps <= 1e-3:
        raise ValueError("eps out of the supported range")
    x, y = (np.asarray(a, dtype=np.float64) for a in sample)
    rng = np.random.default_rng(seed)
    if model == "aps":
        net = init_network("aps", x.shape[-1], rng)
        loss_fn = lambda: _aps_batch_loss(net, x[None, :], y[None, :], True)
    elif model == "col":
        n = x.shape[-1] // 2
        net = init_network("col", n, rng)
        m = aps_linear_map(grid if grid is not None else dft_grid(n))
        loss_fn = lambda: _col_batch_loss(net, x[None, :], y[None, :], m, True)
    else:
        raise ValueError(f"unknown model {model!r}")

    _, grads = loss_fn()
    names = sorted(net.tensors)
    sizes = np.array([net.tensors[k].size for k in names])
    total = int(sizes.sum())
    picks = rng.choice(total, size=min(num_params, total), replace=False)
    bounds = np.cumsum(sizes)

    worst = 0.0
    for flat in sorted(picks):
        t = int(np.searchsorted(bounds, flat, side="right"))
        offset = flat - (bounds[t - 1] if t else 0)
        tensor = net.tensors[names[t]].reshape(-1)
        keep = tensor[offset]
        tensor[offset] = keep + eps
        lp, _ = loss_fn()
        tensor[offset] = keep - eps
        lm, _ = loss_fn()
        tensor[offset] = keep
        numeric = (lp - lm) / (2.0 * eps)
        analytic = grads[names[t]].reshape(-1)[offset]
        denom = max(abs(numeric), abs(analytic), 1e-8)
        worst = max(worst, abs(numeric - analytic) / denom)
    return worst
