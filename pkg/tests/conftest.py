import numpy as np
import pytest

from effcap_mac.fading import FadingModel
from effcap_mac.rates import SystemParams


@pytest.fixture(scope="session")
def rayleigh():
    return FadingModel.rayleigh(1.0)


@pytest.fixture(scope="session")
def sym_params():
    """Two users at 0 dB, theta = 0.01, T = 2 ms, B = 100 kHz."""
    return SystemParams.common_theta([1.0, 1.0], 0.01)


@pytest.fixture(scope="session")
def models2(rayleigh):
    return [rayleigh, rayleigh]


def mc_oracle(exponent, M, n=10_000_000, seed=2024, chunk=1_000_000):
    """Plain Monte Carlo of E{exp(-x(z))} with unit-mean exponential gains.

    Independent of the package sampler.  Returns (log mean, stderr of mean / mean)
    per output column.
    """
    rng = np.random.default_rng(seed)
    s = s2 = 0.0
    done = 0
    while done < n:
        m = min(chunk, n - done)
        z = rng.exponential(size=(m, M))
        v = np.exp(-exponent(z))
        s = s + v.sum(axis=0)
        s2 = s2 + (v * v).sum(axis=0)
        done += m
    mean = s / n
    var = s2 / n - mean ** 2
    return np.log(mean), np.sqrt(var / n) / mean


ACCEPTANCE_LINES: list[str] = []


def report(number: int, title: str, ok: bool, detail: str):
    line = f"ACCEPTANCE {number} {title}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
