"""Shared pytest plumbing: the acceptance suite registers one verdict
line per criterion here and the terminal summary prints them."""

verdicts: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if verdicts:
        terminalreporter.section("acceptance criteria")
        for line in verdicts:
            terminalreporter.write_line(line)
