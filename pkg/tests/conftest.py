import random

import pytest

from crnc.corpus import random_corpus, support_inputs

CORPUS_SEED = 1
CORPUS_SIZE = 200
INPUTS_PER_SPEC = 20

# criterion number -> (title, passed); filled in by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[str, bool]] = {}


@pytest.fixture(scope="session")
def corpus():
    return random_corpus(CORPUS_SIZE, CORPUS_SEED)


@pytest.fixture(scope="session")
def corpus_inputs(corpus):
    rng = random.Random(CORPUS_SEED)
    return [support_inputs(spec.n, INPUTS_PER_SPEC, rng) for spec in corpus]


@pytest.fixture(scope="session")
def small_corpus():
    return random_corpus(25, 7)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        title, ok = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d} [{'PASS' if ok else 'FAIL'}] {title}")
