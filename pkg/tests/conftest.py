import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        ok, title, note = RESULTS[number]
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title}"
        terminalreporter.write_line(line + (f"  [{note}]" if note else ""))
