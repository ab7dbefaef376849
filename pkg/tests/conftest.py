import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

# one "ACCEPTANCE n PASS|FAIL ..." line per criterion, filled by test_acceptance
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
