import pytest

from tripod_haptics import kernels

CRITERIA: dict[int, str] = {}


def record(n: int, ok: bool, detail: str) -> None:
    """Store one acceptance line; printed in the terminal summary."""
    CRITERIA[n] = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"


def pytest_report_header(config):
    return f"tripod_haptics kernel backend: {kernels.BACKEND}"


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        terminalreporter.write_line(CRITERIA[n])


@pytest.fixture(params=sorted(kernels.backends()))
def backend(request):
    """Each importable kernel module in turn."""
    return kernels.backends()[request.param]
