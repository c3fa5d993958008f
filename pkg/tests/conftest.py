_acceptance_results = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance.py" in report.nodeid:
        _acceptance_results.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if _acceptance_results:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, outcome in _acceptance_results:
            tag = "PASS" if outcome == "passed" else outcome.upper()
            terminalreporter.write_line(f"{tag}: {name}")
