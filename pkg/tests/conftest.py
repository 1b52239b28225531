import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

RESULTS = []


def record(name: str, ok: bool, detail: str = "", seconds: float = 0.0):
    line = f"{'PASS' if ok else 'FAIL'}  {name}  ({seconds:.1f}s) {detail}".rstrip()
    RESULTS.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
