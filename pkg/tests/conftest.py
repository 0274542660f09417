"""Collects one verdict line per acceptance criterion and prints them at the end of the run."""

VERDICTS: dict[int, str] = {}


def record(k: int, ok: bool, detail: str) -> None:
    VERDICTS[k] = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"
    print(VERDICTS[k])


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[k])
