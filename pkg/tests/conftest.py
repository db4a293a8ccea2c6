import os

import hypothesis
import numpy as np
import pytest

from hybridwalk.walk_core import WalkState

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def random_state(rng, half_width=None, max_half_width=10):
    """Normalized complex Gaussian amplitudes on a random lattice."""
    if half_width is None:
        half_width = int(rng.integers(0, max_half_width + 1))
    shape = (2 * half_width + 1, 2)
    a = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    # sparsify some states so that low-|n| and product-like cases also occur
    if rng.random() < 0.3:
        a[rng.random(shape) < 0.6] = 0
        if not np.any(a):
            a[half_width, 0] = 1.0
    return WalkState(half_width, a / np.linalg.norm(a))


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def report_criterion(number: int, passed: bool, detail: str) -> bool:
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
