import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pebblechain import evaluate  # noqa: E402

# mix64 maps zero to zero, so a zero seed would make every element zero
SEED = (1).to_bytes(8, "little")


@pytest.fixture
def seed() -> bytes:
    return SEED


def seed_for(provider: str, label: bytes = b"seed") -> bytes:
    return evaluate(provider, label)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in module.RESULTS:
        terminalreporter.write_line(line)
