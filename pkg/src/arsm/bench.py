"""Ablation runner, parameter sweeps and the end-to-end seeded benchmark."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .config import GlobalConfig
from .corpus import World, synth_corpus
from .evaluation import BenchReport, evaluate
from .model import ModelParams
from .pipeline import ALL_DISABLED, FULL, SINGLE_ABLATIONS, AblationSpec, Pipeline
from .trainer import ClosedLoopResult, closed_loop

log = logging.getLogger(__name__)

SWEEP_GRIDS = {
    "tau_risk": (0.4, 0.5, 0.6, 0.7, 0.8),
    "m": (1, 3, 5, 7, 10),
    "adv_ratio": (0.0, 0.1, 0.3, 0.5),
}


@dataclass
class AblationRow:
    name: str
    report: BenchReport
    d_accuracy: float
    d_asr: float


def ablate(pipe: Pipeline, samples, ablations: tuple[AblationSpec, ...] = SINGLE_ABLATIONS) -> list[AblationRow]:
    """Full pipeline first, then one row per disabled stage with deltas against it."""
    full = evaluate(pipe, samples, FULL)
    rows = [AblationRow("full", full, 0.0, 0.0)]
    for ab in ablations:
        rep = evaluate(pipe, samples, ab)
        rows.append(AblationRow(ab.name, rep, rep.accuracy - full.accuracy, rep.attack_success_rate - full.attack_success_rate))
    return rows


def ablation_table(rows: list[AblationRow]) -> str:
    width = max(len(r.name) for r in rows)
    head = f"{'variant':<{width}}  accuracy  d_acc    asr     d_asr    reject  halluc"
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append(
            f"{r.name:<{width}}  {r.report.accuracy:.4f}  {r.d_accuracy:+.4f}  {r.report.attack_success_rate:.4f}"
            f"  {r.d_asr:+.4f}  {r.report.safe_rejection_rate:.4f}  {r.report.hallucination_rate:.4f}"
        )
    return "\n".join(lines)


def ablation_record(rows: list[AblationRow]) -> list[dict]:
    return [
        {"variant": r.name, "d_accuracy": r.d_accuracy, "d_asr": r.d_asr, "report": r.report.as_record()}
        for r in rows
    ]


def sweep(axis: str, values, world: World, theta: ModelParams, cfg: GlobalConfig, test, train=None, val=None) -> list[tuple[float, float, float]]:
    """(value, accuracy, ASR) per grid value.

    ``tau_risk`` and ``m`` only act at inference, so the given parameters are
    re-evaluated. ``adv_ratio`` changes training, so every value retrains
    from scratch with the closed loop (``train`` and ``val`` required).
    """
    if axis not in SWEEP_GRIDS:
        raise ValueError(f"unknown sweep axis {axis!r}; choose from {sorted(SWEEP_GRIDS)}")
    rows = []
    for v in values:
        point = cfg.replace(**{axis: int(v) if axis == "m" else float(v)})
        if axis == "adv_ratio":
            if train is None or val is None:
                raise ValueError("adv_ratio sweep needs train and validation samples")
            res = closed_loop(world, train, val, point)
            pipe = Pipeline(world, res.theta, res.cfg)
        else:
            pipe = Pipeline(world, theta, point)
        rep = evaluate(pipe, test)
        rows.append((float(v), rep.accuracy, rep.attack_success_rate))
    return rows


def sweep_tsv(axis: str, rows) -> str:
    return f"{axis}\taccuracy\tattack_success_rate\n" + "".join(f"{v!r}\t{a!r}\t{s!r}\n" for v, a, s in rows)


def baseline_config(cfg: GlobalConfig) -> GlobalConfig:
    """Undefended reference: no refusal or consistency loss, no adversarial pool."""
    return cfg.replace(gamma=0.0, delta=0.0, adv_ratio=0.0)


@dataclass
class BenchmarkRun:
    world: World
    samples: list
    trained: ClosedLoopResult
    ablation: list[AblationRow]
    baseline: BenchReport

    def split(self, name: str) -> list:
        return [s for s in self.samples if s.split == name]


def run_benchmark(cfg: GlobalConfig) -> BenchmarkRun:
    """Synthesize, train with the closed loop, ablate on test, and score the undefended baseline."""
    world, samples = synth_corpus(cfg)
    train = [s for s in samples if s.split == "train"]
    val = [s for s in samples if s.split == "val"]
    test = [s for s in samples if s.split == "test"]
    trained = closed_loop(world, train, val, cfg)
    rows = ablate(Pipeline(world, trained.theta, trained.cfg), test)
    base = closed_loop(world, train, val, baseline_config(cfg))
    baseline = evaluate(Pipeline(world, base.theta, base.cfg), test, ALL_DISABLED)
    return BenchmarkRun(world, samples, trained, rows, baseline)
