def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS, report_lines

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in report_lines():
        terminalreporter.write_line(line)
