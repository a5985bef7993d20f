"""Collects the acceptance verdict lines and repeats them after the run."""
import pytest

_LINES: list[str] = []


@pytest.fixture
def verdict(request, capsys):
    """verdict(k, ok, detail) prints and records one line for criterion k."""
    seen = []

    def record(k, ok, detail=""):
        line = f"ACCEPTANCE {k}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        seen.append(k)
        _LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok

    yield record
    rep = getattr(request.node, "rep_call", None)
    if not seen and rep is not None and rep.failed:
        _LINES.append(f"ACCEPTANCE {request.node.name}: FAIL  raised before a verdict")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    out = yield
    rep = out.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
