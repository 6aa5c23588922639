"""Linear-softmax decision head with a sigmoid refusal head, its losses and gradients."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import kernels

LOG_FLOOR = kernels.LOG_FLOOR
DEFAULT_LOSS_WEIGHTS = (0.3, 0.3, 0.2, 0.2)
REFUSAL_BIAS_INIT = -2.0


@dataclass
class ModelParams:
    W: np.ndarray  # (C, d)
    b: np.ndarray  # (C,)
    w_ref: np.ndarray  # (d,)
    b_ref: float
    version: int = 0

    @property
    def n_classes(self) -> int:
        return self.W.shape[0]

    @property
    def dim(self) -> int:
        return self.W.shape[1]

    def copy(self) -> ModelParams:
        return ModelParams(self.W.copy(), self.b.copy(), self.w_ref.copy(), float(self.b_ref), self.version)

    def validate(self) -> None:
        C, d = self.W.shape
        if self.b.shape != (C,) or self.w_ref.shape != (d,):
            raise ValueError("parameter shapes do not agree")
        if not (np.isfinite(self.W).all() and np.isfinite(self.b).all() and np.isfinite(self.w_ref).all() and math.isfinite(self.b_ref)):
            raise ValueError("non-finite parameter entries")


def init_params(n_classes: int, d: int) -> ModelParams:
    """Zero class weights; the refusal head starts with a prior leaning towards answering."""
    return ModelParams(np.zeros((n_classes, d)), np.zeros(n_classes), np.zeros(d), REFUSAL_BIAS_INIT)


@dataclass(frozen=True)
class DecisionDistribution:
    probs: np.ndarray
    refusal_prob: float

    @property
    def raw_confidence(self) -> float:
        return float(self.probs.max())

    @property
    def argmax(self) -> int:
        return int(np.argmax(self.probs))


@dataclass(frozen=True)
class LossBreakdown:
    l_acc: float
    l_rob: float
    l_sec: float
    l_cons: float
    l_total: float


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def sigmoid(s: float) -> float:
    if s >= 0:
        return 1.0 / (1.0 + math.exp(-s))
    e = math.exp(s)
    return e / (1.0 + e)


def forward(x: np.ndarray, theta: ModelParams) -> DecisionDistribution:
    if x.shape != (theta.dim,):
        raise ValueError(f"dimension mismatch: x {x.shape} vs model dim {theta.dim}")
    return DecisionDistribution(softmax(theta.W @ x + theta.b), sigmoid(float(theta.w_ref @ x) + theta.b_ref))


def forward_batch(X: np.ndarray, theta: ModelParams) -> tuple[np.ndarray, np.ndarray]:
    Z = X @ theta.W.T + theta.b
    Z -= Z.max(axis=1, keepdims=True)
    P = np.exp(Z)
    P /= P.sum(axis=1, keepdims=True)
    R = 1.0 / (1.0 + np.exp(-(X @ theta.w_ref + theta.b_ref)))
    return P, R


def loss_acc(p: DecisionDistribution, y: int) -> float:
    return -math.log(max(float(p.probs[y]), LOG_FLOOR))


def loss_rob(p_clean: DecisionDistribution | np.ndarray, p_adv: DecisionDistribution | np.ndarray) -> float:
    """KL(p_clean || p_adv)."""
    p = getattr(p_clean, "probs", p_clean)
    q = getattr(p_adv, "probs", p_adv)
    if p.shape != q.shape:
        raise ValueError("distributions have different class counts")
    return float(np.sum(p * (np.log(np.maximum(p, LOG_FLOOR)) - np.log(np.maximum(q, LOG_FLOOR)))))


def loss_sec(refusal_prob: float, should_refuse: bool) -> float:
    if should_refuse:
        return -math.log(max(refusal_prob, LOG_FLOOR))
    return -math.log(max(1.0 - refusal_prob, LOG_FLOOR))


def loss_cons(p: DecisionDistribution | np.ndarray, class_consistency: np.ndarray) -> float:
    """Expected inconsistency of the answer under the class distribution."""
    probs = getattr(p, "probs", p)
    return float(probs @ (1.0 - np.asarray(class_consistency)))


def total_loss(l_acc: float, l_rob: float, l_sec: float, l_cons: float, weights=DEFAULT_LOSS_WEIGHTS) -> LossBreakdown:
    alpha, beta, gamma, delta = weights
    if min(weights) < 0:
        raise ValueError("loss weights must be non-negative")
    return LossBreakdown(l_acc, l_rob, l_sec, l_cons, alpha * l_acc + beta * l_rob + gamma * l_sec + delta * l_cons)


def sample_loss(x, x_adv, y, should_refuse, class_consistency, theta, weights=DEFAULT_LOSS_WEIGHTS) -> LossBreakdown:
    p = forward(x, theta)
    q = forward(x_adv, theta)
    return total_loss(
        loss_acc(p, y), loss_rob(p, q), loss_sec(p.refusal_prob, should_refuse), loss_cons(p, class_consistency), weights
    )


@dataclass
class Gradients:
    W: np.ndarray
    b: np.ndarray
    w_ref: np.ndarray
    b_ref: float
    components: np.ndarray = field(default_factory=lambda: np.zeros(4))

    def norm(self) -> float:
        return math.sqrt(float((self.W**2).sum() + (self.b**2).sum() + (self.w_ref**2).sum() + self.b_ref**2))


def batch_gradients(X, Xadv, y, should_refuse, U, theta: ModelParams, weights=DEFAULT_LOSS_WEIGHTS) -> Gradients:
    """Mean total-loss gradient over a batch; ``U`` holds 1 - class consistency per row."""
    comps, gW, gb, gwr, gbr = kernels.batch_objective(
        np.ascontiguousarray(X, dtype=np.float64),
        np.ascontiguousarray(Xadv, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.int64),
        np.ascontiguousarray(should_refuse, dtype=np.float64),
        np.ascontiguousarray(U, dtype=np.float64),
        theta.W,
        theta.b,
        theta.w_ref,
        float(theta.b_ref),
        np.asarray(weights, dtype=np.float64),
    )
    return Gradients(gW, gb, gwr, float(gbr), comps)


def gradients(x, x_adv, y, should_refuse, class_consistency, theta: ModelParams, weights=DEFAULT_LOSS_WEIGHTS) -> Gradients:
    """Analytic gradient of the total loss of one sample (x_adv treated as a constant)."""
    return batch_gradients(
        x[None, :], x_adv[None, :], np.array([y]), np.array([float(should_refuse)]),
        (1.0 - np.asarray(class_consistency, dtype=np.float64))[None, :], theta, weights,
    )


# -- checkpoints -------------------------------------------------------------------

CHECKPOINT_FORMAT = "arsm-checkpoint/1"


def checkpoint_dict(theta: ModelParams, **meta) -> dict:
    return {
        "format": CHECKPOINT_FORMAT,
        "version": theta.version,
        "W": theta.W.tolist(),
        "b": theta.b.tolist(),
        "w_ref": theta.w_ref.tolist(),
        "b_ref": theta.b_ref,
        **meta,
    }


def save_checkpoint(path: str | Path, theta: ModelParams, **meta) -> None:
    Path(path).write_text(json.dumps(checkpoint_dict(theta, **meta), sort_keys=True) + "\n", encoding="utf-8")


def load_checkpoint(path: str | Path) -> tuple[ModelParams, dict]:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    if obj.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not an arsm checkpoint")
    theta = ModelParams(
        np.array(obj.pop("W"), dtype=np.float64),
        np.array(obj.pop("b"), dtype=np.float64),
        np.array(obj.pop("w_ref"), dtype=np.float64),
        float(obj.pop("b_ref")),
        int(obj.pop("version")),
    )
    theta.validate()
    return theta, obj
