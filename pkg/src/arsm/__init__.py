"""Adversarially robust, security-gated decision pipeline for medical question answering.

Stages: input risk perception, evidence retrieval with credibility ranking,
a linear decision head with a refusal output, knowledge-graph consistency
checking, confidence reweighting and a safe-output gate. Training combines
accuracy, robustness, refusal and consistency losses with a reward-driven
outer loop.
"""

from .config import GlobalConfig, load_config
from .corpus import Sample, World, synth_corpus
from .evaluation import BenchReport, evaluate
from .gate import GateDecision, Verdict
from .model import ModelParams, init_params
from .pipeline import AblationSpec, Pipeline
from .trainer import closed_loop, train_epochs

__version__ = "0.1.0"

__all__ = [
    "AblationSpec",
    "BenchReport",
    "GateDecision",
    "GlobalConfig",
    "ModelParams",
    "Pipeline",
    "Sample",
    "Verdict",
    "World",
    "closed_loop",
    "evaluate",
    "init_params",
    "load_config",
    "synth_corpus",
    "train_epochs",
]
