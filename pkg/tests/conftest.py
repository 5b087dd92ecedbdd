"""Shared pytest plumbing.

The acceptance tests each register one verdict line through
record_criterion; the terminal-summary hook replays them as a block at
the end of the run, so a captured log always shows every criterion's
state even though passing tests swallow their stdout.
"""

_LINES = []


def record_criterion(name: str, passed: bool, detail: str) -> str:
    line = f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}"
    _LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in _LINES:
        terminalreporter.write_line(line)
