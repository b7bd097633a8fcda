"""Collects the acceptance verdicts and prints them at the end of the session."""

ACCEPTANCE: dict = {}


def record(number: int, passed: bool, detail: str) -> bool:
    line = f"ACCEPTANCE {number} {'PASS' if passed else 'FAIL'}: {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
