import pytest

from fracvar.kernels import ProcessSpec

_ACCEPTANCE_LINES = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line for the acceptance summary."""

    def _report(criterion, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


PROBE_SPECS = [
    ProcessSpec.fbm(0.3),
    ProcessSpec.fbm(0.5),
    ProcessSpec.fbm(0.8),
    ProcessSpec.bifbm(0.6, 0.5),
    ProcessSpec.bifbm(0.4, 1.5),
    ProcessSpec.bifbm(0.7, 1.0),
    ProcessSpec.trifbm(0.5, 0.8),
    ProcessSpec.trifbm(0.4, 0.5),
    ProcessSpec.nfbm(1, 0.4),
    ProcessSpec.nfbm(2, 1.5),
    ProcessSpec.nfbm(3, 2.3),
]


@pytest.fixture(params=PROBE_SPECS, ids=lambda s: s.label())
def probe_spec(request):
    return request.param
