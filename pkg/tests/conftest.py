import functools

import numpy as np
import pytest

from fourierident.fourier_system import build_dictionary
from fourierident.grid import NoiseSpec, add_noise
from fourierident.metrics import truth_vector
from fourierident.simulate import TRUE_COEFFICIENTS, benchmark_spec, simulate


@functools.lru_cache(maxsize=None)
def clean_benchmark(eq):
    return simulate(benchmark_spec(eq))


def noisy_benchmark(eq, nsr, seed):
    return add_noise(clean_benchmark(eq), NoiseSpec(nsr, seed))


def true_vector(eq, dictionary=None):
    return truth_vector(TRUE_COEFFICIENTS[eq], dictionary or build_dictionary())


def true_support(eq, dictionary=None):
    return tuple(np.flatnonzero(true_vector(eq, dictionary)).tolist())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES = []


def report(number, passed, detail):
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
