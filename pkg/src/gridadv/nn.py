"""Model families: feed-forward classifier and recurrent regressor.

Both families expose a forward pass that records a cache and a backward pass
that returns exact reverse-mode gradients of the recorded computation with
respect to every parameter *and* the input. One backward serves both the
training update and input-gradient attack crafting.

MLP: ReLU hidden layers with inverted dropout, identity output (logits).
RNN: shared weights across timesteps, h_{t+1} = tanh(W_in x_t + W_h h_t + b),
readout = small fully-connected stack on h_T (ReLU hidden, linear scalar out).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ContractError, ParseError, ShapeError
from .tensor import RandomSource, as_tensor, relu, relu_backward

CHECKPOINT_VERSION = 1


@dataclass
class MlpArch:
    input_dim: int
    hidden: list[int]
    n_classes: int
    dropout: float = 0.1


@dataclass
class RnnArch:
    n_features: int
    hidden_width: int
    memory: int  # timesteps per input window
    readout_hidden: list[int] = field(default_factory=lambda: [16])
    dropout: float = 0.1


@dataclass
class MlpModel:
    arch: MlpArch
    weights: list[np.ndarray]  # weights[l] is in_l x out_l
    biases: list[np.ndarray]

    def param_arrays(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend([w, b])
        return out


@dataclass
class RnnModel:
    arch: RnnArch
    w_in: np.ndarray  # F x H
    w_h: np.ndarray  # H x H
    b_h: np.ndarray  # H
    readout_weights: list[np.ndarray]
    readout_biases: list[np.ndarray]

    def param_arrays(self) -> list[np.ndarray]:
        out = [self.w_in, self.w_h, self.b_h]
        for w, b in zip(self.readout_weights, self.readout_biases):
            out.extend([w, b])
        return out


@dataclass
class ForwardCache:
    """Everything backward needs to replay the recorded forward pass."""

    x: np.ndarray
    pre: list[np.ndarray]
    post: list[np.ndarray]
    masks: list  # dropout masks, None entries in eval mode
    hidden: list | None = None  # RNN only: h_0..h_T
    readout_pre: list | None = None  # RNN only: readout pre-activations
    squeezed: bool = False  # input arrived unbatched


@dataclass
class Gradients:
    params: list[np.ndarray]  # same order as model.param_arrays()
    dx: np.ndarray

    def finite(self) -> bool:
        return all(np.isfinite(p).all() for p in self.params) and np.isfinite(self.dx).all()


def _glorot(rng: RandomSource, fan_in: int, fan_out: int) -> np.ndarray:
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, (fan_in, fan_out))


def init_mlp(arch: MlpArch, rng: RandomSource) -> MlpModel:
    dims = [arch.input_dim] + list(arch.hidden) + [arch.n_classes]
    if any(d <= 0 for d in dims):
        raise ConfigError(f"zero-dimension layer in architecture {dims}")
    if not (0.0 <= arch.dropout < 1.0):
        raise ConfigError(f"dropout rate {arch.dropout} outside [0, 1)")
    weights = [_glorot(rng, dims[i], dims[i + 1]) for i in range(len(dims) - 1)]
    biases = [np.zeros(dims[i + 1]) for i in range(len(dims) - 1)]
    return MlpModel(arch, weights, biases)


def init_rnn(arch: RnnArch, rng: RandomSource) -> RnnModel:
    f, h = arch.n_features, arch.hidden_width
    if f <= 0 or h <= 0 or arch.memory < 1:
        raise ConfigError(f"invalid RNN architecture F={f} H={h} T={arch.memory}")
    w_in = _glorot(rng, f, h)
    w_h = _glorot(rng, h, h)
    b_h = np.zeros(h)
    dims = [h] + list(arch.readout_hidden) + [1]
    ro_w = [_glorot(rng, dims[i], dims[i + 1]) for i in range(len(dims) - 1)]
    ro_b = [np.zeros(dims[i + 1]) for i in range(len(dims) - 1)]
    return RnnModel(arch, w_in, w_h, b_h, ro_w, ro_b)


def _dropout_mask(shape, rate: float, rng: RandomSource) -> np.ndarray:
    keep = 1.0 - rate
    return (rng.uniform(size=shape) < keep).astype(np.float64) / keep


def mlp_forward(
    model: MlpModel,
    x: np.ndarray,
    mode: str = "eval",
    rng: RandomSource | None = None,
) -> tuple[np.ndarray, ForwardCache]:
    """Returns (logits, cache). Train mode applies inverted dropout from rng."""
    x = as_tensor(x)
    squeezed = x.ndim == 1
    if squeezed:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != model.arch.input_dim:
        raise ShapeError(
            f"mlp_forward: input shape {x.shape} vs input dim {model.arch.input_dim}"
        )
    if mode == "train" and model.arch.dropout > 0.0 and rng is None:
        raise ContractError("train mode needs an rng for dropout masks")

    n_layers = len(model.weights)
    pre, post, masks = [], [], []
    a = x
    for l in range(n_layers):
        z = a @ model.weights[l] + model.biases[l]
        pre.append(z)
        if l < n_layers - 1:
            a = relu(z)
            if mode == "train" and model.arch.dropout > 0.0:
                m = _dropout_mask(a.shape, model.arch.dropout, rng)
                a = a * m
                masks.append(m)
            else:
                masks.append(None)
        else:
            a = z
            masks.append(None)
        post.append(a)
    logits = a
    cache = ForwardCache(x=x, pre=pre, post=post, masks=masks, squeezed=squeezed)
    return (logits[0] if squeezed else logits), cache


def mlp_backward(model: MlpModel, cache: ForwardCache, dlogits: np.ndarray) -> Gradients:
    dlogits = as_tensor(dlogits)
    if cache.squeezed and dlogits.ndim == 1:
        dlogits = dlogits[None, :]
    n_layers = len(model.weights)
    if len(cache.pre) != n_layers or dlogits.shape != cache.post[-1].shape:
        raise ContractError("cache does not match this model/forward call")

    dws = [None] * n_layers
    dbs = [None] * n_layers
    grad = dlogits
    for l in range(n_layers - 1, -1, -1):
        if l < n_layers - 1:
            if cache.masks[l] is not None:
                grad = grad * cache.masks[l]
            grad = relu_backward(cache.pre[l], grad)
        a_prev = cache.x if l == 0 else cache.post[l - 1]
        dws[l] = a_prev.T @ grad
        dbs[l] = grad.sum(axis=0)
        grad = grad @ model.weights[l].T
    dx = grad[0] if cache.squeezed else grad
    params = []
    for w, b in zip(dws, dbs):
        params.extend([w, b])
    return Gradients(params=params, dx=dx)


def rnn_forward(
    model: RnnModel,
    x_seq: np.ndarray,
    mode: str = "eval",
    rng: RandomSource | None = None,
) -> tuple[np.ndarray, ForwardCache]:
    """Returns (prediction, cache). x_seq is T x F or batch x T x F.

    h_0 = 0; prediction is the readout stack applied to h_T. Unbatched input
    yields a scalar prediction, batched input a length-batch vector.
    """
    x_seq = as_tensor(x_seq)
    squeezed = x_seq.ndim == 2
    if squeezed:
        x_seq = x_seq[None, :, :]
    t_len, f = model.arch.memory, model.arch.n_features
    if x_seq.ndim != 3 or x_seq.shape[1] != t_len or x_seq.shape[2] != f:
        raise ShapeError(
            f"rnn_forward: input shape {x_seq.shape} vs expected (batch, {t_len}, {f})"
        )
    if mode == "train" and model.arch.dropout > 0.0 and rng is None:
        raise ContractError("train mode needs an rng for dropout masks")

    batch = x_seq.shape[0]
    h = np.zeros((batch, model.arch.hidden_width))
    hidden = [h]
    rec_pre = []
    for t in range(t_len):
        z = x_seq[:, t, :] @ model.w_in + h @ model.w_h + model.b_h
        rec_pre.append(z)
        h = np.tanh(z)
        hidden.append(h)

    # Readout stack: ReLU hidden layers (with dropout in train mode), linear out.
    n_ro = len(model.readout_weights)
    pre, post, masks = [], [], []
    a = h
    for l in range(n_ro):
        z = a @ model.readout_weights[l] + model.readout_biases[l]
        pre.append(z)
        if l < n_ro - 1:
            a = relu(z)
            if mode == "train" and model.arch.dropout > 0.0:
                m = _dropout_mask(a.shape, model.arch.dropout, rng)
                a = a * m
                masks.append(m)
            else:
                masks.append(None)
        else:
            a = z
            masks.append(None)
        post.append(a)
    y_hat = a[:, 0]
    cache = ForwardCache(
        x=x_seq,
        pre=rec_pre,
        post=post,
        masks=masks,
        hidden=hidden,
        readout_pre=pre,
        squeezed=squeezed,
    )
    return (float(y_hat[0]) if squeezed else y_hat), cache


def rnn_backward(model: RnnModel, cache: ForwardCache, dy: np.ndarray) -> Gradients:
    """Backprop through time. dy is scalar (unbatched) or length-batch."""
    if cache.hidden is None:
        raise ContractError("cache was not produced by rnn_forward")
    dy = np.atleast_1d(as_tensor(dy))
    batch, t_len, _ = cache.x.shape
    if dy.shape != (batch,):
        raise ContractError(f"dy shape {dy.shape} does not match batch {batch}")

    # Readout stack backward.
    n_ro = len(model.readout_weights)
    ro_pre = cache.readout_pre
    d_ro_w = [None] * n_ro
    d_ro_b = [None] * n_ro
    grad = dy[:, None]
    for l in range(n_ro - 1, -1, -1):
        if l < n_ro - 1:
            if cache.masks[l] is not None:
                grad = grad * cache.masks[l]
            grad = relu_backward(ro_pre[l], grad)
        a_prev = cache.hidden[-1] if l == 0 else cache.post[l - 1]
        d_ro_w[l] = a_prev.T @ grad
        d_ro_b[l] = grad.sum(axis=0)
        grad = grad @ model.readout_weights[l].T

    # Recurrence backward; weights shared across timesteps, so accumulate.
    d_w_in = np.zeros_like(model.w_in)
    d_w_h = np.zeros_like(model.w_h)
    d_b_h = np.zeros_like(model.b_h)
    dx = np.zeros_like(cache.x)
    dh = grad  # dL/dh_T
    for t in range(t_len - 1, -1, -1):
        dz = dh * (1.0 - np.tanh(cache.pre[t]) ** 2)
        d_w_in += cache.x[:, t, :].T @ dz
        d_w_h += cache.hidden[t].T @ dz
        d_b_h += dz.sum(axis=0)
        dx[:, t, :] = dz @ model.w_in.T
        dh = dz @ model.w_h.T

    params = [d_w_in, d_w_h, d_b_h]
    for w, b in zip(d_ro_w, d_ro_b):
        params.extend([w, b])
    return Gradients(params=params, dx=dx[0] if cache.squeezed else dx)


def forward(model, x, mode: str = "eval", rng: RandomSource | None = None):
    if isinstance(model, MlpModel):
        return mlp_forward(model, x, mode, rng)
    return rnn_forward(model, x, mode, rng)


def backward(model, cache: ForwardCache, dout) -> Gradients:
    if isinstance(model, MlpModel):
        return mlp_backward(model, cache, dout)
    return rnn_backward(model, cache, dout)


def grad_check(model, x, y, loss_tag: str, h: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    Relative error per coordinate is |analytic - numeric| / max(1, |analytic|).
    Runs in eval mode (no dropout). Checks every parameter and the input.
    """
    from .train import loss_function  # local import avoids a module cycle

    loss_fn = loss_function(loss_tag)
    x = as_tensor(x)

    def loss_at() -> float:
        out, _ = forward(model, x, mode="eval")
        value, _ = loss_fn(out, y)
        return value

    out, cache = forward(model, x, mode="eval")
    _, dout = loss_fn(out, y)
    grads = backward(model, cache, dout)

    worst = 0.0
    for arr, g in zip(model.param_arrays() + [x], grads.params + [grads.dx]):
        flat = arr.ravel()
        gflat = np.asarray(g, dtype=np.float64).ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = loss_at()
            flat[i] = orig - h
            down = loss_at()
            flat[i] = orig
            numeric = (up - down) / (2.0 * h)
            err = abs(gflat[i] - numeric) / max(1.0, abs(gflat[i]))
            worst = max(worst, err)
    return worst


def _arch_dict(model) -> dict:
    if isinstance(model, MlpModel):
        a = model.arch
        return {
            "input_dim": a.input_dim,
            "hidden": list(a.hidden),
            "n_classes": a.n_classes,
            "dropout": a.dropout,
        }
    a = model.arch
    return {
        "n_features": a.n_features,
        "hidden_width": a.hidden_width,
        "memory": a.memory,
        "readout_hidden": list(a.readout_hidden),
        "dropout": a.dropout,
    }


def save_model(model, path, normalization: dict | None = None) -> None:
    """Checkpoint as JSON; parameters stored flat in param_arrays() order."""
    doc = {
        "format_version": CHECKPOINT_VERSION,
        "family": "mlp" if isinstance(model, MlpModel) else "rnn",
        "architecture": _arch_dict(model),
        "params": [p.ravel().tolist() for p in model.param_arrays()],
        "dropout": model.arch.dropout,
        "normalization": normalization,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_model(path):
    """Returns (model, normalization dict or None). Bit-exact round trip."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not a valid checkpoint file ({exc})") from exc
    if doc.get("format_version") != CHECKPOINT_VERSION:
        raise ParseError(
            f"{path}: unsupported checkpoint format_version {doc.get('format_version')}"
        )
    arch_d = doc["architecture"]
    if doc["family"] == "mlp":
        arch = MlpArch(
            input_dim=arch_d["input_dim"],
            hidden=list(arch_d["hidden"]),
            n_classes=arch_d["n_classes"],
            dropout=arch_d["dropout"],
        )
        model = init_mlp(arch, RandomSource(0))
    else:
        arch = RnnArch(
            n_features=arch_d["n_features"],
            hidden_width=arch_d["hidden_width"],
            memory=arch_d["memory"],
            readout_hidden=list(arch_d["readout_hidden"]),
            dropout=arch_d["dropout"],
        )
        model = init_rnn(arch, RandomSource(0))
    for target, flat in zip(model.param_arrays(), doc["params"]):
        target[...] = np.asarray(flat, dtype=np.float64).reshape(target.shape)
    return model, doc.get("normalization")
