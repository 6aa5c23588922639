"""Mini-batch training of the decision head and the reward-driven outer loop."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .adversarial import build_pool
from .config import GlobalConfig
from .evaluation import BenchReport, evaluate
from .model import ModelParams, batch_gradients, init_params
from .pipeline import Pipeline

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


def cosine_lr(lr: float, t: int, total: int) -> float:
    if total <= 0:
        return lr
    return lr * (1.0 + math.cos(math.pi * t / total)) / 2.0


def epoch_rng(seed: int, tag: int, epoch: int) -> np.random.Generator:
    """Generator driving pool construction and batch order of one epoch."""
    return np.random.default_rng([seed, 7, tag, epoch])


@dataclass
class TrainingSet:
    """Feature rows and targets of a sample list, as seen by one pipeline."""

    samples: list
    X: np.ndarray
    y: np.ndarray
    t: np.ndarray
    U: np.ndarray


def prepare(pipe: Pipeline, samples) -> TrainingSet:
    if not samples:
        raise ValueError("no training samples")
    X = np.array([pipe.encode(s.text) for s in samples])
    U = np.array([1.0 - pipe.class_consistency(pipe.query_entities(s.text)).support for s in samples])
    return TrainingSet(
        list(samples), X, np.array([s.y for s in samples], dtype=np.int64),
        np.array([float(s.should_refuse) for s in samples]), U,
    )


@dataclass
class EpochLog:
    epoch: int
    lr: float
    l_acc: float
    l_rob: float
    l_sec: float
    l_cons: float
    l_total: float
    pool: dict[str, int] = field(default_factory=dict)


def train_epochs(pipe: Pipeline, data: TrainingSet, cfg: GlobalConfig, theta0: ModelParams, tag: int = 0) -> tuple[ModelParams, list[EpochLog]]:
    """Minimize the weighted joint loss with cosine-annealed SGD and L2 decay.

    Each epoch first rebuilds the adversarial pool against the current
    parameters (``cfg.adv_ratio`` of the samples), then sweeps shuffled
    mini-batches. ``tag`` separates the random streams of repeated calls.
    """
    theta = theta0.copy()
    weights = cfg.loss_weights
    n = len(data.samples)
    logs = []
    for epoch in range(cfg.epochs):
        lr = cosine_lr(cfg.lr, epoch, cfg.epochs)
        rng = epoch_rng(cfg.seed, tag, epoch)
        X, Xadv, t, U = data.X, data.X, data.t, data.U
        composition: dict[str, int] = {}
        if cfg.adv_ratio > 0:
            entries, composition = build_pool(data.samples, data.X, theta, cfg.adv_ratio, cfg.eps, pipe.world.lex, rng, cfg.p_swap)
            X, Xadv, t, U = data.X.copy(), data.X.copy(), data.t.copy(), data.U.copy()
            for e in entries:
                if e.x_adv is not None:
                    Xadv[e.index] = e.x_adv
                else:
                    X[e.index] = Xadv[e.index] = pipe.encode(e.text)
                    t[e.index] = float(e.should_refuse)
                    U[e.index] = 1.0 - pipe.class_consistency(pipe.query_entities(e.text)).support
        order = rng.permutation(n)
        sums = np.zeros(4)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            g = batch_gradients(X[idx], Xadv[idx], data.y[idx], t[idx], U[idx], theta, weights)
            if not (np.isfinite(g.components).all() and np.isfinite(g.W).all()):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch starting {start}: {g.components}")
            theta.W -= lr * (g.W + cfg.weight_decay * theta.W)
            theta.b -= lr * g.b
            theta.w_ref -= lr * (g.w_ref + cfg.weight_decay * theta.w_ref)
            theta.b_ref -= lr * g.b_ref
            sums += g.components * len(idx)
        comps = sums / n
        total = float(np.dot(weights, comps))
        if not math.isfinite(total):
            raise TrainingError(f"non-finite loss at epoch {epoch}")
        logs.append(EpochLog(epoch, lr, *map(float, comps), total, composition))
        log.debug("epoch %d lr %.5f loss %.5f", epoch, lr, total)
    if cfg.epochs:
        theta.version = theta0.version + 1
    return theta, logs


# -- reward and closed loop --------------------------------------------------------------


@dataclass(frozen=True)
class RewardReport:
    acc: float
    attack: float
    sec: float
    cons: float
    reward: float


def reward(acc: float, attack: float, sec: float, cons: float, weights=(0.3, 0.3, 0.2, 0.2), three_term: bool = False) -> RewardReport:
    for name, v in (("acc", acc), ("attack", attack), ("sec", sec), ("cons", cons)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name}={v} outside [0, 1]")
    a, b, c, d = weights
    r = a * acc + b * (1.0 - attack) + c * sec
    if not three_term:
        r += d * cons
    return RewardReport(acc, attack, sec, cons, r)


def reward_of(rep: BenchReport, cfg: GlobalConfig) -> RewardReport:
    return reward(rep.accuracy, rep.attack_success_rate, rep.secure_output_rate, rep.consistency_mean,
                  cfg.loss_weights, cfg.reward_three_term)


THRESHOLD_KEYS = ("tau_sem", "tau_inj", "tau_conf")


@dataclass
class RoundRecord:
    round: int
    train_reward: float
    checkpoint_accepted: bool
    proposal: dict[str, float]
    proposal_reward: float
    proposal_accepted: bool
    best_reward: float
    thresholds: dict[str, float]
    final_loss: float | None


@dataclass
class ClosedLoopResult:
    theta: ModelParams
    cfg: GlobalConfig
    history: list[RoundRecord]
    accepted_rewards: list[float]
    epoch_logs: list[list[EpochLog]]

    def history_record(self) -> dict:
        return {
            "rounds": [asdict(r) for r in self.history],
            "accepted_rewards": self.accepted_rewards,
            "best_reward": self.accepted_rewards[-1] if self.accepted_rewards else None,
            "thresholds": {k: getattr(self.cfg, k) for k in THRESHOLD_KEYS},
        }


def thresholds_of(cfg: GlobalConfig) -> dict[str, float]:
    return {k: getattr(cfg, k) for k in THRESHOLD_KEYS}


def closed_loop(world, train_samples, val_samples, cfg: GlobalConfig, rounds: int | None = None,
                theta0: ModelParams | None = None, on_round=None) -> ClosedLoopResult:
    """Alternate training rounds with greedy single-coordinate threshold moves.

    A round's retrained parameters replace the kept ones only if validation
    reward does not drop; a threshold proposal is kept only if it strictly
    raises reward. ``on_round(r, theta, cfg, record)`` is called after every round.
    """
    rounds = cfg.rounds if rounds is None else rounds
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    theta = theta0.copy() if theta0 is not None else init_params(len(world.templates), cfg.d)
    pipe = Pipeline(world, theta, cfg)
    data = prepare(pipe, train_samples)
    rng = np.random.default_rng([cfg.seed, 11])
    best: float | None = None
    accepted: list[float] = []
    history: list[RoundRecord] = []
    all_logs = []
    for r in range(rounds):
        cand, logs = train_epochs(pipe, data, cfg, theta, tag=r)
        all_logs.append(logs)
        cand_reward = reward_of(evaluate(Pipeline(world, cand, cfg), val_samples), cfg).reward
        took = best is None or cand_reward >= best
        if took:
            theta, best = cand, cand_reward
            accepted.append(cand_reward)
            pipe.theta = theta

        key = THRESHOLD_KEYS[r % len(THRESHOLD_KEYS)]
        step = cfg.threshold_step if rng.random() < 0.5 else -cfg.threshold_step
        value = round(min(1.0, max(0.0, getattr(cfg, key) + step)), 10)
        proposal = cfg.replace(**{key: value})
        prop_reward = reward_of(evaluate(Pipeline(world, theta, proposal), val_samples), proposal).reward
        moved = prop_reward > best
        if moved:
            cfg, best = proposal, prop_reward
            accepted.append(prop_reward)
        rec = RoundRecord(
            r, cand_reward, took, {key: value}, prop_reward, moved, best, thresholds_of(cfg),
            logs[-1].l_total if logs else None,
        )
        history.append(rec)
        log.info("round %d: train reward %.4f (%s), proposal %s=%.2f reward %.4f (%s)", r, cand_reward,
                 "kept" if took else "reverted", key, value, prop_reward, "kept" if moved else "rejected")
        if on_round is not None:
            on_round(r, theta, cfg, rec)
    return ClosedLoopResult(theta, cfg, history, accepted, all_logs)
