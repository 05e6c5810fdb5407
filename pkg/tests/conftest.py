import os

from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

import json
from pathlib import Path

import pytest

GOLDEN_PATH = Path(__file__).with_name("golden.json")
ACCEPTANCE: dict = {}
MEASURED: dict = {}


class Recorder:
    """Collects sub-checks for one acceptance criterion."""

    def __init__(self, number: int, golden: dict):
        self.number = number
        self.golden = golden
        self.checks = []

    def check(self, name: str, ok: bool, detail: str = "") -> bool:
        self.checks.append((name, bool(ok), detail))
        print(f"  [{'ok' if ok else 'FAIL'}] {name} {detail}")
        return bool(ok)

    def measured(self, key: str, value: float, rel: float = 1e-6):
        """Record a measured constant and compare it with its frozen value."""
        value = float(value)
        MEASURED[key] = value
        if key in self.golden:
            g = self.golden[key]
            self.check(f"golden {key}", abs(value - g) <= rel * abs(g) + 1e-12, f"{value:.6g} vs {g:.6g}")

    def finish(self):
        failed = [n for n, ok, _ in self.checks if not ok]
        ACCEPTANCE[self.number] = (not failed, failed)
        assert not failed, f"criterion {self.number} failed: {failed}"


@pytest.fixture(scope="session")
def golden():
    if GOLDEN_PATH.exists():
        return json.loads(GOLDEN_PATH.read_text())
    return {}


@pytest.fixture
def criterion(golden):
    return lambda number: Recorder(number, golden)


def pytest_sessionfinish(session, exitstatus):
    if MEASURED and os.environ.get("LOOPFORGE_FREEZE"):
        old = json.loads(GOLDEN_PATH.read_text()) if GOLDEN_PATH.exists() else {}
        old.update(MEASURED)
        GOLDEN_PATH.write_text(json.dumps(old, indent=1, sort_keys=True) + "\n")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, failed = ACCEPTANCE[k]
        line = f"criterion {k}: {'PASS' if ok else 'FAIL'}"
        if failed:
            line += "  (" + ", ".join(failed) + ")"
        terminalreporter.write_line(line)
