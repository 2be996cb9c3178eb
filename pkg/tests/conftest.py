import sys

import numpy as np
import pytest

from longmem.spectral import fourier_frequencies


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def freqs():
    return fourier_frequencies(1024)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for mod in list(sys.modules.values()):
        lines.extend(getattr(mod, "ACCEPTANCE_REPORT", []))
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split()[0])):
            terminalreporter.write_line(line)
