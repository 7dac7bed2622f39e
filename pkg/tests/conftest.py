import sys
from pathlib import Path

import pytest

from normbench.storygen import REFERENCE_SEED, GenConfig, generate_corpus
from normbench.world import Story, default_world

FIXTURES = Path(__file__).parent / "fixtures"
REPO = Path(__file__).parent.parent
sys.path.insert(0, str(Path(__file__).parent))

_acceptance_lines: list[str] = []


@pytest.fixture(scope="session")
def world():
    return default_world()


@pytest.fixture(scope="session")
def vocab(world):
    return world[0]


@pytest.fixture(scope="session")
def plan(world):
    return world[1]


@pytest.fixture(scope="session")
def sample(vocab):
    lines = (FIXTURES / "sample_story.txt").read_text().splitlines()
    return Story.from_lines("sample", lines, vocab)


@pytest.fixture(scope="session")
def corpus(world):
    return generate_corpus(GenConfig(seed=REFERENCE_SEED), *world)


@pytest.fixture
def story_of(vocab):
    def make(*lines, story_id="s"):
        return Story.from_lines(story_id, lines, vocab)
    return make


@pytest.fixture(scope="session")
def criterion():
    """Record one acceptance line; printed in the terminal summary."""
    def record(number, name, ok, detail=""):
        status = "PASS" if ok else "FAIL"
        _acceptance_lines.append(f"[{status}] criterion {number:>2}: {name}" + (f" ({detail})" if detail else ""))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_acceptance_lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
