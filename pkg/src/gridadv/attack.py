"""One-step adversarial input crafting and the black-box surrogate pipeline.

Crafting is single-step gradient ascent on the loss with respect to the
input. Two kernels: "gradient-sign" adds epsilon * sign(g) (sign(0) = 0) and
keeps the max-norm of the perturbation at exactly epsilon; "scaled-gradient"
adds epsilon * g. The sparse variant restricts the perturbation to the
largest-|gradient| entries (ceil(gamma * size), optionally masked) and leaves
every other entry bit-identical.

The black-box pipeline trains a surrogate model on the raw training data and
crafts against it only; no victim model ever enters this module.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import nn, train
from .errors import ConfigError, ContractError, ShapeError
from .tensor import as_tensor, top_k_indices

KERNELS = ("gradient-sign", "scaled-gradient")


@dataclass
class AttackSpec:
    epsilon: float
    gamma: float = 1.0
    kernel: str = "gradient-sign"
    feature_mask: np.ndarray | None = None  # flat indices of attackable entries
    clip_lo: float | np.ndarray | None = None
    clip_hi: float | np.ndarray | None = None
    signed_ranking: bool = False

    def __post_init__(self):
        if self.epsilon < 0:
            raise ConfigError(f"epsilon must be >= 0, got {self.epsilon}")
        if not (0.0 <= self.gamma <= 1.0):
            raise ConfigError(f"gamma must be in [0, 1], got {self.gamma}")
        if self.kernel not in KERNELS:
            raise ConfigError(f"unknown kernel {self.kernel!r}; expected one of {KERNELS}")
        if self.feature_mask is not None:
            self.feature_mask = np.asarray(sorted(set(int(i) for i in self.feature_mask)))
        if self.clip_lo is not None and self.clip_hi is not None:
            if np.any(np.asarray(self.clip_lo) > np.asarray(self.clip_hi)):
                raise ConfigError("clip bounds must satisfy lo <= hi")

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "gamma": self.gamma,
            "kernel": self.kernel,
            "feature_mask": None
            if self.feature_mask is None
            else self.feature_mask.tolist(),
            "clip_lo": _scalar_or_list(self.clip_lo),
            "clip_hi": _scalar_or_list(self.clip_hi),
            "signed_ranking": self.signed_ranking,
        }


def _scalar_or_list(v):
    if v is None:
        return None
    arr = np.asarray(v)
    return float(arr) if arr.ndim == 0 else arr.tolist()


@dataclass
class AdversarialRecord:
    original: np.ndarray
    adversarial: np.ndarray
    target: np.ndarray
    surrogate_loss_before: float
    surrogate_loss_after: float


@dataclass
class AdversarialSet:
    records: list[AdversarialRecord]
    spec: AttackSpec
    surrogate_fingerprint: str

    def __len__(self) -> int:
        return len(self.records)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sample_id", "original", "adversarial", "target"])
            for i, rec in enumerate(self.records):
                writer.writerow(
                    [
                        i,
                        " ".join(repr(float(v)) for v in rec.original.ravel()),
                        " ".join(repr(float(v)) for v in rec.adversarial.ravel()),
                        " ".join(repr(float(v)) for v in np.atleast_1d(rec.target).ravel()),
                    ]
                )

    def write_json_summary(self, path) -> None:
        deltas = [
            float(np.abs(r.adversarial - r.original).max()) for r in self.records
        ]
        modified = [
            int(np.count_nonzero(r.adversarial != r.original)) for r in self.records
        ]
        doc = {
            "spec": self.spec.to_dict(),
            "surrogate_fingerprint": self.surrogate_fingerprint,
            "n_samples": len(self.records),
            "max_abs_delta": max(deltas) if deltas else 0.0,
            "mean_abs_delta": float(np.mean(deltas)) if deltas else 0.0,
            "mean_modified_entries": float(np.mean(modified)) if modified else 0.0,
            "mean_surrogate_loss_before": float(
                np.mean([r.surrogate_loss_before for r in self.records])
            )
            if self.records
            else 0.0,
            "mean_surrogate_loss_after": float(
                np.mean([r.surrogate_loss_after for r in self.records])
            )
            if self.records
            else 0.0,
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)


def model_fingerprint(model) -> str:
    h = hashlib.sha256()
    for p in model.param_arrays():
        h.update(np.ascontiguousarray(p).tobytes())
    return h.hexdigest()


def input_gradient(model, x, y, loss_tag: str) -> np.ndarray:
    """Exact reverse-mode gradient of the loss w.r.t. the input, eval mode."""
    loss_fn = train.loss_function(loss_tag)
    out, cache = nn.forward(model, x, mode="eval")
    _, dout = loss_fn(out, y)
    return nn.backward(model, cache, dout).dx


def _kernel_delta(g: np.ndarray, spec: AttackSpec) -> np.ndarray:
    if spec.kernel == "gradient-sign":
        return spec.epsilon * np.sign(g)
    return spec.epsilon * g


def craft_dense(x, g, spec: AttackSpec) -> np.ndarray:
    """Perturb every entry: x + kernel(g), then clip if bounds are set."""
    x = as_tensor(x)
    g = as_tensor(g)
    if x.shape != g.shape:
        raise ShapeError(f"input shape {x.shape} vs gradient shape {g.shape}")
    adv = x + _kernel_delta(g, spec)
    if spec.kernel == "gradient-sign":
        adv = _enforce_budget(adv, x, spec.epsilon)
    if spec.clip_lo is not None or spec.clip_hi is not None:
        adv = np.clip(adv, spec.clip_lo, spec.clip_hi)
    return adv


def _enforce_budget(adv: np.ndarray, x: np.ndarray, epsilon: float) -> np.ndarray:
    """Guarantee |adv - x| <= epsilon exactly in float arithmetic.

    x + epsilon rounds to the nearest representable value, which can land one
    ulp beyond the budget; nudge such entries back toward x.
    """
    over = np.abs(adv - x) > epsilon
    while np.any(over):
        adv = np.where(over, np.nextafter(adv, x), adv)
        over = np.abs(adv - x) > epsilon
    return adv


def select_entries(g, gamma: float, feature_mask=None, signed: bool = False) -> list[int]:
    """Flat indices of the ceil(gamma * size) largest-gradient attackable entries."""
    if not (0.0 <= gamma <= 1.0):
        raise ConfigError(f"gamma must be in [0, 1], got {gamma}")
    flat = as_tensor(g).ravel()
    if feature_mask is None:
        maskable = np.arange(flat.size)
    else:
        maskable = np.asarray(sorted(set(int(i) for i in feature_mask)))
    k = min(int(np.ceil(gamma * flat.size)), maskable.size)
    picked = top_k_indices(flat[maskable], k, signed=signed)
    return [int(maskable[i]) for i in picked]


def craft_sparse(x, g, spec: AttackSpec) -> np.ndarray:
    """Perturb only the selected entries; the rest stay bit-identical to x.

    Clipping applies to the selected entries only, so untouched entries are
    preserved even when x itself sits outside the clip range.
    """
    x = as_tensor(x)
    g = as_tensor(g)
    if x.shape != g.shape:
        raise ShapeError(f"input shape {x.shape} vs gradient shape {g.shape}")
    selected = select_entries(g, spec.gamma, spec.feature_mask, spec.signed_ranking)
    adv = x.copy()
    flat = adv.ravel()
    delta = _kernel_delta(g, spec).ravel()
    for i in selected:
        v = flat[i] + delta[i]
        if spec.kernel == "gradient-sign":
            while abs(v - flat[i]) > spec.epsilon:
                v = np.nextafter(v, flat[i])
        if spec.clip_lo is not None or spec.clip_hi is not None:
            lo = _bound_at(spec.clip_lo, i, -np.inf)
            hi = _bound_at(spec.clip_hi, i, np.inf)
            v = min(max(v, lo), hi)
        flat[i] = v
    return adv


def _bound_at(bound, i: int, default: float) -> float:
    if bound is None:
        return default
    arr = np.asarray(bound, dtype=np.float64)
    return float(arr) if arr.ndim == 0 else float(arr.ravel()[i])


def craft_with_model(
    model,
    clean_samples: list[tuple[np.ndarray, np.ndarray]],
    spec: AttackSpec,
    loss_tag: str,
) -> AdversarialSet:
    """Craft one adversarial input per clean sample against a trained model."""
    loss_fn = train.loss_function(loss_tag)
    records = []
    for x, y in clean_samples:
        g = input_gradient(model, x, y, loss_tag)
        adv = craft_sparse(x, g, spec)
        out_before, _ = nn.forward(model, x, mode="eval")
        out_after, _ = nn.forward(model, adv, mode="eval")
        loss_before, _ = loss_fn(out_before, y)
        loss_after, _ = loss_fn(out_after, y)
        records.append(
            AdversarialRecord(
                original=as_tensor(x),
                adversarial=adv,
                target=np.atleast_1d(as_tensor(y)),
                surrogate_loss_before=loss_before,
                surrogate_loss_after=loss_after,
            )
        )
    return AdversarialSet(
        records=records, spec=spec, surrogate_fingerprint=model_fingerprint(model)
    )


def craft_adversarial_set(
    train_data: train.Dataset,
    clean_samples: list[tuple[np.ndarray, np.ndarray]],
    surrogate_arch,
    hyper: train.Hyperparams,
    spec: AttackSpec,
    n_adv: int,
    seed: int,
) -> AdversarialSet:
    """Train a surrogate on the raw data, then craft against it only.

    The victim model never enters this function; black-box transfer is
    enforced by the interface.
    """
    if n_adv > len(clean_samples):
        raise ContractError(
            f"n_adv={n_adv} exceeds available clean samples ({len(clean_samples)})"
        )
    from dataclasses import replace

    from .tensor import RandomSource

    root = RandomSource(seed)
    init = nn.init_mlp if isinstance(surrogate_arch, nn.MlpArch) else nn.init_rnn
    surrogate = init(surrogate_arch, root.child("surrogate-init"))
    hyper = replace(hyper, seed=root.child("surrogate-train").seed)
    surrogate, _ = train.fit(surrogate, train_data, hyper)
    return craft_with_model(surrogate, clean_samples[:n_adv], spec, hyper.loss)
