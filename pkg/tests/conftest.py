import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fracmg import KernelParams, axis_measure, build_hierarchy, discretize_measure  # noqa: E402


@pytest.fixture(scope="session")
def hierarchy4():
    return build_hierarchy(4, 4, 4, (2.0, 2.0))


@pytest.fixture(scope="session")
def ex1():
    return axis_measure(), KernelParams(0.75)


@pytest.fixture(scope="session")
def uniform16():
    return discretize_measure(lambda t: 1.0, 16)


@pytest.fixture(scope="session")
def gen_cache(tmp_path_factory):
    return tmp_path_factory.mktemp("generators")


_ACCEPTANCE = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Recorder for one PASS/FAIL line per acceptance criterion."""

    def record(number, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} | {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
