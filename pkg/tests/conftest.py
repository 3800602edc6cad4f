import os
import sys

from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import REPORT
    except ImportError:
        return
    if REPORT:
        terminalreporter.section("acceptance criteria")
        def key(line):
            label = line.split("criterion ")[1].split(":")[0]
            digits = "".join(c for c in label if c.isdigit())
            return int(digits), label

        for line in sorted(REPORT, key=key):
            terminalreporter.write_line(line)
