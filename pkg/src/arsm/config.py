"""Global configuration: every hyperparameter with its default, flat ``key = value`` files."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from dataclasses import dataclass, fields
from pathlib import Path

from .evidence import DEFAULT_MU
from .gate import GateThresholds
from .risk import RiskThresholds


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GlobalConfig:
    seed: int = 42
    d: int = 256

    tau_sem: float = 0.6
    tau_inj: float = 0.5
    tau_risk: float = 0.6

    lam: float = 0.2
    k: int = 10
    m: int = 5
    mu1: float = DEFAULT_MU[0]
    mu2: float = DEFAULT_MU[1]
    mu3: float = DEFAULT_MU[2]
    poison_store: bool = True
    poison_authority: float = 0.1

    tau_cons: float = 0.8
    consistency_gate: str = "edge"

    tau_conf: float = 0.7
    tau_conf_star: float = 0.85
    refusal_threshold: float = 0.5
    eta1: float = 0.3
    eta2: float = 0.4
    eta3: float = 0.3
    reweight_literal: bool = False

    alpha: float = 0.3
    beta: float = 0.3
    gamma: float = 0.2
    delta: float = 0.2

    epochs: int = 100
    lr: float = 5.0
    batch_size: int = 32
    weight_decay: float = 1e-4
    adv_ratio: float = 0.3
    eps: float = 0.01
    risk_encoding: bool = True
    rounds: int = 5
    threshold_step: float = 0.05
    reward_three_term: bool = False

    n_total: int = 1000
    split_train: float = 0.70
    split_val: float = 0.15
    split_test: float = 0.15
    mix_semantic: float = 0.2
    mix_injection: float = 0.2
    mix_drug: float = 0.2
    mix_evidence: float = 0.2
    mix_clean: float = 0.2
    p_swap: float = 0.5

    strict_accuracy: bool = False

    def __post_init__(self) -> None:
        problems = []
        if abs(self.split_train + self.split_val + self.split_test - 1.0) > 1e-9:
            problems.append("split fractions must sum to 1")
        if abs(sum(self.attack_mix.values()) - 1.0) > 1e-9:
            problems.append("attack mix must sum to 1")
        if abs(self.mu1 + self.mu2 + self.mu3 - 1.0) > 1e-9:
            problems.append("mu1 + mu2 + mu3 must equal 1")
        if not 0.0 <= self.adv_ratio <= 1.0:
            problems.append("adv_ratio must be in [0, 1]")
        if min(self.alpha, self.beta, self.gamma, self.delta) < 0:
            problems.append("loss weights must be non-negative")
        if self.epochs < 0 or self.batch_size < 1 or self.lr <= 0 or self.eps <= 0 or self.rounds < 1:
            problems.append("epochs >= 0, batch_size >= 1, lr > 0, eps > 0, rounds >= 1 required")
        if self.k < 1 or self.m < 1 or self.d < 16:
            problems.append("k >= 1, m >= 1, d >= 16 required")
        if self.consistency_gate not in ("edge", "pairs"):
            problems.append("consistency_gate must be 'edge' or 'pairs'")
        if problems:
            raise ConfigError("; ".join(problems))

    @property
    def attack_mix(self) -> dict[str, float]:
        return {
            "semantic_perturbation": self.mix_semantic,
            "prompt_injection": self.mix_injection,
            "drug_name_confusion": self.mix_drug,
            "false_evidence_splice": self.mix_evidence,
            "clean": self.mix_clean,
        }

    @property
    def mu(self) -> tuple[float, float, float]:
        return (self.mu1, self.mu2, self.mu3)

    @property
    def eta(self) -> tuple[float, float, float]:
        return (self.eta1, self.eta2, self.eta3)

    @property
    def loss_weights(self) -> tuple[float, float, float, float]:
        return (self.alpha, self.beta, self.gamma, self.delta)

    @property
    def risk_thresholds(self) -> RiskThresholds:
        return RiskThresholds(self.tau_sem, self.tau_inj, self.tau_risk)

    @property
    def gate_thresholds(self) -> GateThresholds:
        return GateThresholds(self.tau_conf, self.tau_conf_star, self.refusal_threshold)

    def replace(self, **changes) -> GlobalConfig:
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def dumps(self) -> str:
        return "".join(f"{k} = {_fmt(v)}\n" for k, v in self.as_dict().items())


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v) if isinstance(v, float) else str(v)


def _coerce(name: str, typ: str, raw: str):
    raw = raw.strip()
    try:
        if typ == "bool":
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if typ == "int":
            return int(raw)
        if typ == "float":
            return float(raw)
        return raw.strip("\"'")
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r} (expected {typ})") from None


_TYPES = {f.name: f.type for f in fields(GlobalConfig)}


def parse_overrides(pairs: dict[str, str]) -> dict:
    out = {}
    for key, raw in pairs.items():
        if key not in _TYPES:
            raise ConfigError(f"unknown config key: {key}")
        out[key] = _coerce(key, _TYPES[key], raw)
    return out


def read_pairs(path: str | Path) -> dict[str, str]:
    """Raw ``key = value`` pairs of a config file (``#`` starts a comment)."""
    pairs: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value
    return pairs


def load_config(path: str | Path | None = None, overrides: dict[str, str] | None = None) -> GlobalConfig:
    """Defaults, then the file, then ``overrides``, then ``ARSM_SEED`` for the seed."""
    pairs = read_pairs(path) if path is not None else {}
    pairs.update(overrides or {})
    if os.environ.get("ARSM_SEED"):
        pairs["seed"] = os.environ["ARSM_SEED"]
    return GlobalConfig(**parse_overrides(pairs))
