import re

import pytest

# criterion number -> detail string recorded by the acceptance tests
ACCEPTANCE_DETAILS = {}
N_CRITERIA = 10


@pytest.fixture
def acceptance():
    def record(number, detail):
        ACCEPTANCE_DETAILS.setdefault(number, []).append(detail)

    return record


def pytest_terminal_summary(terminalreporter):
    outcomes = {}
    for key in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", getattr(rep, "nodeid", ""))
            if m and (rep.when == "call" or key == "error"):
                n = int(m.group(1))
                # parametrised criteria pass only if every case passes
                if outcomes.get(n) != "FAIL":
                    outcomes[n] = "PASS" if key == "passed" else "FAIL"
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, N_CRITERIA + 1):
        status = outcomes.get(n, "NOT RUN")
        detail = "; ".join(ACCEPTANCE_DETAILS.get(n, []))
        terminalreporter.write_line(f"criterion {n:2d}: {status:7s} {detail}")
