"""Terminal reporting for the acceptance suite: one pass/fail line per
criterion at the end of the run."""

_ACCEPTANCE_PREFIX = "test_acceptance.py"
_results = {}


def pytest_runtest_logreport(report):
    if _ACCEPTANCE_PREFIX not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call":
        _results[name] = (report.outcome, report.duration)
    elif report.when == "setup" and report.outcome != "passed":
        _results[name] = (report.outcome, report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_results):
        outcome, duration = _results[name]
        label = name.replace("test_", "", 1).replace("_", " ")
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{mark} {label} ({duration:.1f}s)")
