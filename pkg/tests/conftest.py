from pathlib import Path

ACCEPTANCE_REPORT = Path(__file__).resolve().parent.parent / "test-reports" / "acceptance.txt"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_REPORT.exists():
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_REPORT.read_text().splitlines():
            terminalreporter.write_line(line)
