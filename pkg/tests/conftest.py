import pytest

#: (number, title, passed, detail) rows filled in by test_acceptance
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_RESULTS):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"criterion {number} {status}  {title}: {detail}")


@pytest.fixture
def criterion():
    def record(number, title, passed, detail):
        ACCEPTANCE_RESULTS.append((number, title, bool(passed), detail))
        print(f"criterion {number} {'PASS' if passed else 'FAIL'}  {title}: {detail}")
        assert passed, f"criterion {number} failed: {detail}"

    return record
