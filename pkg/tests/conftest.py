from fractions import Fraction
from pathlib import Path

import pytest

from bntv.model import product_net

DATA = Path(__file__).parent / "data"


@pytest.fixture
def footnote():
    """P = Ber(2/3) x Ber(2/3), Q = Ber(1/3) x Ber(1/3); symbol 0 plays the role of 1."""
    p = product_net([[Fraction(2, 3), Fraction(1, 3)]] * 2)
    q = product_net([[Fraction(1, 3), Fraction(2, 3)]] * 2)
    return p, q


@pytest.fixture
def data_dir():
    return DATA


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for the end-of-run acceptance summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE_KEY, [])

    def record(label: str, ok: bool, detail: str = "") -> bool:
        line = f"{'PASS' if ok else 'FAIL'} {label}" + (f" ({detail})" if detail else "")
        lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
