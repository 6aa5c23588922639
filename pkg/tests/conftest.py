import numpy as np
import pytest
from hypothesis import settings

from arsm.config import GlobalConfig
from arsm.corpus import synth_corpus
from arsm.graph import parse_graph
from arsm.lexicon import default_lexicons

# the first call of a jitted kernel pays for loading it; runs are derandomized so reruns match
settings.register_profile("arsm", deadline=None, derandomize=True, max_examples=200)
settings.load_profile("arsm")

# filled by test_acceptance.py, printed once at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])


@pytest.fixture(scope="session")
def lex():
    return default_lexicons()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_corpus():
    """100-sample seeded world, shared read-only by the fast tests."""
    cfg = GlobalConfig(n_total=100)
    world, samples = synth_corpus(cfg)
    return cfg, world, samples


@pytest.fixture
def tiny_graph():
    return parse_graph(
        "entities\tdrug.a\tdisease.b\tsymptom.c\tsymptom.d\n"
        "drug.a\tdisease.b\ttreats\n"
        "disease.b\tsymptom.c\tindicates\n"
        "disease.b\tsymptom.d\tindicates\n"
        "[exclusive]\n"
        "treats\tcontraindicated\n"
    )
