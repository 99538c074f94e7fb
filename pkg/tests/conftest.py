import numpy as np
import pytest

from approx_dcim.cells import default_library, exact_compressor_42, load_library


def apx_c0_text() -> str:
    """Exact 4-2 table with cout forced to 0, as library-file text."""
    rows = exact_compressor_42().rows.copy()
    rows[:, 2] = 0
    body = "\n".join("".join(str(int(b)) for b in r) for r in rows)
    return f"cell apx_c0 5 3 weights 1 2 2\n{body}\nend\n"


@pytest.fixture(scope="session")
def lib():
    return default_library()


@pytest.fixture(scope="session")
def c0_lib():
    """K=2 library: exact cell plus APX-C0."""
    return load_library(exact_compressor_42().to_text() + apx_c0_text())


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


CRITERIA: dict = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    CRITERIA[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[n])
