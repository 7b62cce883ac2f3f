import numpy as np
import pytest
from hypothesis import strategies as st

from gpcompare.covariance import ProcessSpec

_acceptance_lines: list[str] = []


@pytest.fixture
def acceptance_log():
    def log(number: int, passed: bool, detail: str) -> None:
        _acceptance_lines.append(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")

    return log


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


def random_spec(rng: np.random.Generator, n: int, rank: int | None = None, neg_inf: bool = False) -> ProcessSpec:
    r = n if rank is None else rank
    a = rng.standard_normal((n, r))
    shifts = rng.normal(size=n)
    if neg_inf and n > 1:
        shifts[rng.integers(n)] = -np.inf
    return ProcessSpec(tuple(f"i{j}" for j in range(n)), a @ a.T, shifts)


@st.composite
def specs(draw, min_n=1, max_n=6, neg_inf=False):
    n = draw(st.integers(min_n, max_n))
    seed = draw(st.integers(0, 2**32 - 1))
    rank = draw(st.integers(1, n))
    return random_spec(np.random.default_rng(seed), n, rank, neg_inf)
