import sys

import numpy as np
import pytest


def random_spd(p, rng, cond=10.0):
    Q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    w = np.exp(rng.uniform(0.0, np.log(cond), p))
    return (Q * w) @ Q.T


def random_spectrum(p, rng, low=0.2, high=3.0):
    return np.sort(rng.uniform(low, high, p))


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(mod.LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
