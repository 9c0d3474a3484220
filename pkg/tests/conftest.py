import random
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from speranza.commitments import generate
from speranza.group import RISTRETTO255, TOY
from speranza.protocols import setup_actors

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

T0 = 1_700_000_000

BACKENDS = [RISTRETTO255, TOY]


@pytest.fixture
def rng():
    return random.Random(0x5EED)


@pytest.fixture(params=BACKENDS, ids=lambda g: g.name)
def group(request):
    return request.param


@pytest.fixture
def pp(group):
    return generate(group)


@pytest.fixture
def actors(pp, rng):
    return setup_actors(pp, rng)


ACCEPTANCE: dict[int, str] = {}


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    """Log one acceptance line (printed in the terminal summary) and assert it."""
    line = f"criterion {number:>2} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE[number] = line
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
