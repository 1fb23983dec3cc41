"""Input loss curvature estimators.

The curvature of an example is the trace of the Hessian of its loss with
respect to the input vector.  Three routes are implemented:

* ``zo_curvature`` — derivative-free: four loss evaluations per probe give a
  central-difference estimate of a Hessian quadratic/bilinear form.  This is
  the black-box estimator; it only needs a loss oracle.
* ``hutchinson_curvature`` — first-order: Hessian-vector products from
  differenced input gradients, averaged as v'(Hv) (trace) or ||Hv||^2
  (the trace(H^2) proxy used by earlier memorization work).
* ``exact_trace_oracle`` — brute force: the full diagonal second difference,
  probe-free, for small d.  Kept independent so it can referee the other two.

Probes are Rademacher (+/-1) vectors.  In coupled mode u = v, so each probe
contributes the quadratic form v'Hv (classical Hutchinson, exact on
quadratics).  In paired mode u and v are independent and each probe
contributes D * (u . v) where D estimates u'Hv; since E[uu'] = I for
Rademacher probes this is unbiased for tr(H) with no dimension factor, at
higher variance.  Signed estimates are returned as-is; nothing here assumes
a positive semidefinite Hessian.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from . import nn
from .seeding import derive_seed, stream_of
from .serialize import digest_of

MAX_EXACT_DIM = 64

LossOracle = Callable[[np.ndarray], float]
GradOracle = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class CurvatureConfig:
    """Estimator settings: step size, probe budget, probe coupling, variant."""

    h: float = 1e-3
    n_iter: int = 10
    probe_mode: str = "coupled"
    variant: str = "zero_order"
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.h > 0:
            raise ValueError("h must be positive")
        if self.n_iter < 1:
            raise ValueError("n_iter must be >= 1")
        if self.probe_mode not in ("coupled", "paired"):
            raise ValueError(f"unknown probe_mode {self.probe_mode!r}")
        if self.variant not in ("zero_order", "hutchinson_trace", "hutchinson_sq_proxy",
                                "exact_oracle"):
            raise ValueError(f"unknown variant {self.variant!r}")

    def digest(self) -> str:
        return digest_of({"h": self.h, "n_iter": self.n_iter, "probe_mode": self.probe_mode,
                          "variant": self.variant, "seed": self.seed})

    def to_dict(self) -> dict:
        return {"h": self.h, "n_iter": self.n_iter, "probe_mode": self.probe_mode,
                "variant": self.variant, "seed": self.seed}

    @staticmethod
    def from_dict(doc: dict) -> "CurvatureConfig":
        return CurvatureConfig(
            h=float(doc.get("h", 1e-3)), n_iter=int(doc.get("n_iter", 10)),
            probe_mode=doc.get("probe_mode", "coupled"),
            variant=doc.get("variant", "zero_order"), seed=int(doc.get("seed", 0)))


@dataclass(frozen=True)
class CurvatureScore:
    """One (example, model) curvature observation."""

    example_id: int
    model_digest: str
    value: float
    config_digest: str


def _rademacher(rng: np.random.Generator, shape) -> np.ndarray:
    return rng.integers(0, 2, size=shape).astype(np.float64) * 2.0 - 1.0


def _eval_points(oracle: LossOracle, points: np.ndarray) -> np.ndarray:
    batch = getattr(oracle, "batch", None)
    values = np.asarray(batch(points) if batch is not None
                        else [oracle(p) for p in points], dtype=np.float64)
    if not np.isfinite(values).all():
        raise ValueError("loss oracle returned a non-finite value")
    return values


def zo_curvature(loss_oracle: LossOracle, x: np.ndarray, cfg: CurvatureConfig) -> float:
    """Zero-order trace estimate from four-point loss differences.

    Per probe, D = [f(x+hv+hu) - f(x-hv+hu) - f(x+hv-hu) + f(x-hv-hu)] / (4h^2).
    Coupled mode sets u = v so D is the quadratic form v'Hv and is averaged
    directly; paired mode draws u, v independently and averages D * (u . v).
    Deterministic in cfg.seed.
    """
    if cfg.variant != "zero_order":
        raise ValueError(f"zo_curvature expects variant zero_order, got {cfg.variant!r}")
    x = np.asarray(x, dtype=np.float64)
    d = x.shape[0]
    rng = np.random.default_rng(cfg.seed)
    h = cfg.h
    if cfg.probe_mode == "coupled":
        V = _rademacher(rng, (cfg.n_iter, d))
        # u = v collapses the four points to x +/- 2hv and two copies of x
        points = np.concatenate([x + 2.0 * h * V, x - 2.0 * h * V, x[None, :]])
        vals = _eval_points(loss_oracle, points)
        f_plus, f_minus, f0 = vals[:cfg.n_iter], vals[cfg.n_iter:2 * cfg.n_iter], vals[-1]
        estimates = (f_plus - 2.0 * f0 + f_minus) / (4.0 * h * h)
    else:
        V = _rademacher(rng, (cfg.n_iter, d))
        U = _rademacher(rng, (cfg.n_iter, d))
        points = np.concatenate([x + h * V + h * U, x - h * V + h * U,
                                 x + h * V - h * U, x - h * V - h * U])
        vals = _eval_points(loss_oracle, points).reshape(4, cfg.n_iter)
        D = (vals[0] - vals[1] - vals[2] + vals[3]) / (4.0 * h * h)
        estimates = D * np.einsum("ij,ij->i", U, V)
    return float(estimates.mean())


def hutchinson_from_grad(grad_oracle: GradOracle, x: np.ndarray,
                         cfg: CurvatureConfig) -> float:
    """Hutchinson estimate from differenced gradients: Hv ~ (g(x+hv) - g(x)) / h."""
    if cfg.variant not in ("hutchinson_trace", "hutchinson_sq_proxy"):
        raise ValueError(f"hutchinson estimator got variant {cfg.variant!r}")
    x = np.asarray(x, dtype=np.float64)
    rng = np.random.default_rng(cfg.seed)
    V = _rademacher(rng, (cfg.n_iter, x.shape[0]))
    batch = getattr(grad_oracle, "batch", None)
    if batch is not None:
        g_base = np.asarray(batch(x[None, :]))[0]
        g_pert = np.asarray(batch(x + cfg.h * V))
    else:
        g_base = np.asarray(grad_oracle(x), dtype=np.float64)
        g_pert = np.asarray([grad_oracle(p) for p in x + cfg.h * V], dtype=np.float64)
    if not (np.isfinite(g_base).all() and np.isfinite(g_pert).all()):
        raise ValueError("gradient oracle returned a non-finite value")
    Hv = (g_pert - g_base) / cfg.h
    if cfg.variant == "hutchinson_trace":
        estimates = np.einsum("ij,ij->i", V, Hv)
    else:
        estimates = np.einsum("ij,ij->i", Hv, Hv)
    return float(estimates.mean())


def hutchinson_curvature(params: nn.MlpParams, example: nn.Example,
                         cfg: CurvatureConfig) -> float:
    """Hutchinson input-curvature of an MLP example (trace or tr(H^2) proxy)."""
    return hutchinson_from_grad(mlp_input_grad(params, example.y), example.x, cfg)


def exact_trace_oracle(loss_oracle: LossOracle, x: np.ndarray, h: float) -> float:
    """Probe-free trace: sum_i [f(x+h e_i) - 2 f(x) + f(x-h e_i)] / h^2.

    Quadratic cost in d; refuses d > MAX_EXACT_DIM by policy.
    """
    x = np.asarray(x, dtype=np.float64)
    d = x.shape[0]
    if d > MAX_EXACT_DIM:
        raise ValueError(f"exact_trace_oracle is limited to d <= {MAX_EXACT_DIM}, got {d}")
    if not h > 0:
        raise ValueError("h must be positive")
    eye = np.eye(d)
    points = np.concatenate([x + h * eye, x - h * eye, x[None, :]])
    vals = _eval_points(loss_oracle, points)
    f_plus, f_minus, f0 = vals[:d], vals[d:2 * d], vals[-1]
    return float(np.sum(f_plus - 2.0 * f0 + f_minus) / (h * h))


class _BatchedOracle:
    """Callable on one point, with a vectorized .batch(points) fast path."""

    def __init__(self, single, batched):
        self._single = single
        self.batch = batched

    def __call__(self, x):
        return self._single(x)


def mlp_loss_oracle(params: nn.MlpParams, y: int) -> LossOracle:
    """Loss oracle x -> cross-entropy of (x, y) under `params` (batched)."""
    y = int(y)

    def single(x: np.ndarray) -> float:
        return float(nn.batch_losses(params, np.asarray(x)[None, :], np.array([y]))[0])

    def batched(points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        return nn.batch_losses(params, points, np.full(len(points), y, dtype=np.int64))

    return _BatchedOracle(single, batched)


def mlp_input_grad(params: nn.MlpParams, y: int) -> GradOracle:
    """Gradient oracle x -> d(loss)/dx of (x, y) under `params` (batched)."""
    y = int(y)

    def single(x: np.ndarray) -> np.ndarray:
        return nn.grad_input_batch(params, np.asarray(x)[None, :], np.array([y]))[0]

    def batched(points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        return nn.grad_input_batch(params, points, np.full(len(points), y, dtype=np.int64))

    return _BatchedOracle(single, batched)


def curvature_of_example(params: nn.MlpParams, example: nn.Example,
                         cfg: CurvatureConfig) -> float:
    """Dispatch on cfg.variant for one (model, example) pair."""
    if cfg.variant == "zero_order":
        return zo_curvature(mlp_loss_oracle(params, example.y), example.x, cfg)
    if cfg.variant in ("hutchinson_trace", "hutchinson_sq_proxy"):
        return hutchinson_curvature(params, example, cfg)
    return exact_trace_oracle(mlp_loss_oracle(params, example.y), example.x, cfg.h)


def per_call_config(cfg: CurvatureConfig, example_id: int, model_digest: str) -> CurvatureConfig:
    """Config with a seed derived per (cfg.seed, model, example).

    Keeps scoring order-independent: every (example, model) pair owns its
    probe stream no matter how the work is scheduled.
    """
    seed = derive_seed(derive_seed(cfg.seed, stream_of(model_digest)), example_id)
    return replace(cfg, seed=seed)
