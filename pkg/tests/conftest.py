"""Collects acceptance verdicts and prints one line per criterion at the end of the run."""
VERDICTS = {}


def record(n, ok, detail):
    VERDICTS[n] = (bool(ok), detail)
    return ok


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(VERDICTS):
        ok, detail = VERDICTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
