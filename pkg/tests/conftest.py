import numpy as np
import pytest

from swbi.panel import ReturnPanel

# Fixed 3-factor x 5-year return panel used by the index oracle.
# The first column is the zeroed base year.
FIXED_RETURNS = np.array(
    [
        [0.0, 0.031, -0.012, 0.044, 0.018],
        [0.0, -0.250, 0.105, 0.032, -0.071],
        [0.0, 0.002, 0.009, -0.004, 0.015],
    ]
)


@pytest.fixture
def fixed_panel():
    return ReturnPanel(("A", "B", "C"), np.arange(2000, 2005), FIXED_RETURNS.copy())


def write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(str(v) for v in r) + "\n")
    return path


# -- acceptance report ----------------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(number, title, ok, detail, seconds):
        status = "WAIVED" if ok is None else ("PASS" if ok else "FAIL")
        line = f"criterion {number} {status:6s} {title} ({detail}; {seconds:.1f} s)"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
