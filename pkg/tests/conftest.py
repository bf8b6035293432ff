import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "qml", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("qml")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def acceptance(request, capsys):
    """Record one PASS/FAIL line per acceptance criterion and echo it immediately."""
    lines = request.config.stash.setdefault(_LINES, [])

    def record(number, title, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {title}" + (f" | {detail}" if detail else "")
        lines.append((number, line))
        with capsys.disabled():
            print("\n" + line)
        return ok

    return record


_LINES = pytest.StashKey[list]()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
