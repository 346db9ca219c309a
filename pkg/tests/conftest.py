import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line; the test body fills ``record['detail']``."""
    record = {"name": request.node.name, "detail": ""}
    ACCEPTANCE_LINES.append(record)
    yield record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call" and "criterion" in item.fixturenames:
        for record in ACCEPTANCE_LINES:
            if record["name"] == item.name:
                record["passed"] = rep.passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for record in ACCEPTANCE_LINES:
        status = "PASS" if record.get("passed") else "FAIL"
        terminalreporter.write_line(f"{status}  {record['name']}: {record['detail']}")
