import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from swiptsec import allocator as A  # noqa: E402
from swiptsec.channel import gram_matrices, sample_channels  # noqa: E402
from swiptsec.harness import ExperimentConfig  # noqa: E402


@pytest.fixture(scope="session")
def default_config():
    return ExperimentConfig()


@pytest.fixture(scope="session")
def feasible_draws(default_config):
    """A few feasible default-config draws with their utopia values."""
    system, qos = default_config.system(), default_config.qos()
    out = []
    seed = 0
    while len(out) < 4:
        grams = gram_matrices(sample_channels(seed, system))
        seed += 1
        try:
            utopia = A.compute_utopia(grams, qos, system.eps)
        except A.AllocationError:
            continue
        out.append((grams, qos, system.eps, utopia))
    return out


@pytest.fixture(scope="session")
def tiny_config():
    return ExperimentConfig(num_antennas=2, num_receivers=2)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
