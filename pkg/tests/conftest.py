import pytest

# criterion id -> (passed, title, detail); filled by tests/test_acceptance.py
ACCEPTANCE = {}
CRITERIA = {
    1: "pointwise closeness, exact distribution",
    2: "pointwise closeness, empirical distribution",
    3: "per-edge return probabilities",
    4: "gamma range",
    5: "preprocessing reliability",
    6: "per-call query budget",
    7: "iteration bound",
    8: "amortized sqrt(q) scaling",
    9: "alias exactness",
    10: "degree estimator contract",
}


@pytest.fixture
def record():
    def _record(cid, passed, detail):
        ACCEPTANCE[cid] = (bool(passed), CRITERIA[cid], detail)
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid, title in CRITERIA.items():
        if cid in ACCEPTANCE:
            ok, _, detail = ACCEPTANCE[cid]
            terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {cid:>2} ({title}): {detail}")
        else:
            terminalreporter.write_line(f"SKIP  criterion {cid:>2} ({title}): not run")
