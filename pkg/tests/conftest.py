import time

import pytest

RESULTS = []


class Criterion:
    """Times a block and records one PASS/FAIL line for the acceptance summary."""

    def __init__(self, num, title, limit):
        self.num, self.title, self.limit = num, title, limit
        self.note = ""

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        dt = time.perf_counter() - self.t0
        ok = exc_type is None and dt < self.limit
        line = "acceptance %s %s: %s (%.2fs, limit %ss)%s" % (
            self.num, "PASS" if ok else "FAIL", self.title, dt, self.limit,
            " " + self.note if self.note else "")
        RESULTS.append(line)
        print(line)
        if exc_type is None and not ok:
            raise AssertionError("runtime %.2fs over the %ss limit" % (dt, self.limit))
        return False


    @staticmethod
    def info(line):
        RESULTS.append(line)
        print(line)


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
