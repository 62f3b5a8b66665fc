import re

_CRITERIA: dict[int, bool] = {}
_PATTERN = re.compile(r"test_criterion_(\d+)")


def pytest_runtest_logreport(report):
    match = _PATTERN.search(report.nodeid)
    if not match:
        return
    num = int(match.group(1))
    if report.when == "call":
        _CRITERIA[num] = _CRITERIA.get(num, True) and report.passed
    elif report.failed:  # setup/teardown error counts as a failure
        _CRITERIA[num] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num in sorted(_CRITERIA):
        verdict = "PASS" if _CRITERIA[num] else "FAIL"
        terminalreporter.write_line(f"criterion {num:2d}: {verdict}")
