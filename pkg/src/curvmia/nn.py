"""Small feedforward classifier with exact backpropagation.

Implements the loss oracle the rest of the package audits: a tanh MLP with a
softmax cross-entropy head, hand-written forward/backward passes over both
parameters and inputs, and deterministic initialization.  tanh is fixed
deliberately: curvature scores are second derivatives of the loss with
respect to the input, and piecewise-linear activations would make them
degenerate almost everywhere.

All arithmetic is float64.  Probabilities are clamped at ``PROB_CLIP``
before any log, which caps the per-example loss at ``LOSS_CEILING``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .serialize import digest_of, dumps_canonical, write_canonical

PROB_CLIP = 1e-12
LOSS_CEILING = float(-np.log(PROB_CLIP))

LayerSizes = Sequence[int]


@dataclass(frozen=True)
class Example:
    """One labelled sample: stable id, feature vector, class index."""

    id: int
    x: np.ndarray
    y: int


@dataclass
class MlpParams:
    """Weights/biases of a tanh MLP, plus the seed that produced them.

    `layers[i]` is a pair (w: [out, in], b: [out]) and the shapes chain
    consistently with `arch`.  Treated as immutable after construction;
    training always builds a fresh instance.
    """

    layers: list[tuple[np.ndarray, np.ndarray]]
    arch: tuple[int, ...]
    seed: int
    activation: str = "tanh"
    config_digest: str = field(default="")

    @property
    def n_inputs(self) -> int:
        return self.arch[0]

    @property
    def n_classes(self) -> int:
        return self.arch[-1]


def validate_arch(arch: LayerSizes) -> tuple[int, ...]:
    sizes = tuple(int(s) for s in arch)
    if len(sizes) < 2:
        raise ValueError(f"architecture needs at least input and output sizes, got {sizes}")
    if any(s < 1 for s in sizes):
        raise ValueError(f"layer sizes must be >= 1, got {sizes}")
    return sizes


def init_mlp(arch: LayerSizes, seed: int) -> MlpParams:
    """Deterministic fan-in-scaled uniform init; biases zero.

    Identical (arch, seed) yields bit-identical parameters.
    """
    sizes = validate_arch(arch)
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = 1.0 / np.sqrt(fan_in)
        w = rng.uniform(-limit, limit, size=(fan_out, fan_in))
        b = np.zeros(fan_out)
        layers.append((w, b))
    digest = digest_of({"arch": list(sizes), "seed": int(seed), "activation": "tanh"})
    return MlpParams(layers=layers, arch=sizes, seed=int(seed), config_digest=digest)


def _forward_batch(params: MlpParams, X: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Return (probs [B, k], activations [A0..A_{L-1}] with A0 = X)."""
    acts = [X]
    a = X
    n = len(params.layers)
    for i, (w, b) in enumerate(params.layers):
        z = a @ w.T + b
        if i < n - 1:
            a = np.tanh(z)
            acts.append(a)
        else:
            logits = z
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    probs = e / e.sum(axis=1, keepdims=True)
    return probs, acts


def _check_input(params: MlpParams, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.n_inputs,):
        raise ValueError(f"input has shape {x.shape}, model expects ({params.n_inputs},)")
    return x


def forward_probs(params: MlpParams, X: np.ndarray) -> np.ndarray:
    """Softmax class probabilities for a batch X: [B, d] -> [B, k]."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != params.n_inputs:
        raise ValueError(f"batch has shape {X.shape}, model expects [*, {params.n_inputs}]")
    probs, _ = _forward_batch(params, X)
    return probs


def batch_losses(params: MlpParams, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-example cross-entropy losses, probability-clamped: [B]."""
    probs = forward_probs(params, X)
    p_true = probs[np.arange(len(probs)), np.asarray(y, dtype=np.int64)]
    return -np.log(np.maximum(p_true, PROB_CLIP))


def forward_loss(params: MlpParams, example: Example) -> tuple[np.ndarray, float]:
    """(class probabilities, cross-entropy loss) for one example."""
    x = _check_input(params, example.x)
    if not 0 <= example.y < params.n_classes:
        raise ValueError(f"label {example.y} outside [0, {params.n_classes})")
    probs, _ = _forward_batch(params, x[None, :])
    p_true = max(float(probs[0, example.y]), PROB_CLIP)
    return probs[0], -float(np.log(p_true))


def _logit_deltas(probs: np.ndarray, y: np.ndarray) -> np.ndarray:
    """d(loss)/d(logits) for clamped cross-entropy: probs - onehot.

    Rows whose true-class probability sits at or below the clamp have a
    constant loss, hence an exactly zero gradient.
    """
    B = len(probs)
    y = np.asarray(y, dtype=np.int64)
    delta = probs.copy()
    delta[np.arange(B), y] -= 1.0
    saturated = probs[np.arange(B), y] <= PROB_CLIP
    delta[saturated] = 0.0
    return delta


def _backward(params: MlpParams, acts: list[np.ndarray], delta: np.ndarray,
              need_param_grads: bool) -> tuple[list[tuple[np.ndarray, np.ndarray]] | None, np.ndarray]:
    """Backpropagate logit deltas; returns (param grads or None, input grads [B, d])."""
    grads: list[tuple[np.ndarray, np.ndarray]] = []
    g = delta
    for i in range(len(params.layers) - 1, -1, -1):
        w, _ = params.layers[i]
        if need_param_grads:
            grads.append((g.T @ acts[i], g.sum(axis=0)))
        g = g @ w
        if i > 0:
            g = g * (1.0 - acts[i] ** 2)
    return (grads[::-1] if need_param_grads else None), g


def grad_params(params: MlpParams, batch: Sequence[Example]) -> list[tuple[np.ndarray, np.ndarray]]:
    """Gradient of mean batch loss with respect to every weight and bias."""
    if len(batch) == 0:
        raise ValueError("gradient of an empty batch is undefined")
    X = np.stack([_check_input(params, ex.x) for ex in batch])
    y = np.array([ex.y for ex in batch], dtype=np.int64)
    return grad_params_arrays(params, X, y)


def grad_params_arrays(params: MlpParams, X: np.ndarray,
                       y: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    if len(X) == 0:
        raise ValueError("gradient of an empty batch is undefined")
    probs, acts = _forward_batch(params, np.asarray(X, dtype=np.float64))
    delta = _logit_deltas(probs, y) / len(X)
    grads, _ = _backward(params, acts, delta, need_param_grads=True)
    assert grads is not None
    return grads


def grad_input(params: MlpParams, example: Example) -> np.ndarray:
    """d(loss)/d(x), exact backprop through the input: [d]."""
    x = _check_input(params, example.x)
    return grad_input_batch(params, x[None, :], np.array([example.y]))[0]


def grad_input_batch(params: MlpParams, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-row input gradients for a batch of (x, y): [B, d].

    Losses are per example (not averaged), so row i is exactly
    grad_input on example i.
    """
    probs, acts = _forward_batch(params, np.asarray(X, dtype=np.float64))
    delta = _logit_deltas(probs, y)
    _, gin = _backward(params, acts, delta, need_param_grads=False)
    return gin


def scaled_logit(params: MlpParams, example: Example) -> float:
    """log(p_y / (1 - p_y)) with p_y clamped into [PROB_CLIP, 1 - PROB_CLIP]."""
    probs, _ = forward_loss(params, example)
    p = min(max(float(probs[example.y]), PROB_CLIP), 1.0 - PROB_CLIP)
    return float(np.log(p) - np.log1p(-p))


# -- persistence -------------------------------------------------------------

def params_to_dict(params: MlpParams) -> dict:
    return {
        "arch": list(params.arch),
        "seed": params.seed,
        "activation": params.activation,
        "config_digest": params.config_digest,
        "layers": [{"w": w.tolist(), "b": b.tolist()} for w, b in params.layers],
    }


def params_from_dict(doc: dict) -> MlpParams:
    arch = validate_arch(doc["arch"])
    layers = []
    for i, layer in enumerate(doc["layers"]):
        w = np.asarray(layer["w"], dtype=np.float64)
        b = np.asarray(layer["b"], dtype=np.float64)
        if w.shape != (arch[i + 1], arch[i]) or b.shape != (arch[i + 1],):
            raise ValueError(f"layer {i} shapes {w.shape}/{b.shape} inconsistent with arch {arch}")
        layers.append((w, b))
    if len(layers) != len(arch) - 1:
        raise ValueError(f"{len(layers)} layers inconsistent with arch {arch}")
    return MlpParams(layers=layers, arch=arch, seed=int(doc["seed"]),
                     activation=doc.get("activation", "tanh"),
                     config_digest=doc.get("config_digest", ""))


def params_digest(params: MlpParams) -> str:
    """Content digest of the full parameter document (17-digit floats)."""
    return digest_of(params_to_dict(params))


def save_params(params: MlpParams, path) -> None:
    write_canonical(path, params_to_dict(params))


def load_params(path) -> MlpParams:
    with open(path, "r", encoding="utf-8") as fh:
        return params_from_dict(json.load(fh))


def params_json(params: MlpParams) -> str:
    return dumps_canonical(params_to_dict(params), indent=2)
