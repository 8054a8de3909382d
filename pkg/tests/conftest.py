import pytest


class AcceptanceLog:
    """Collects one pass/fail line per acceptance criterion."""

    def __init__(self):
        self.rows = []

    def check(self, name, ok, detail=""):
        self.rows.append((name, bool(ok), detail))
        assert ok, f"{name}: {detail}"


def pytest_configure(config):
    config._acceptance_log = AcceptanceLog()


@pytest.fixture(scope="session")
def acceptance(request):
    return request.config._acceptance_log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = getattr(config, "_acceptance_log", None)
    if log is None or not log.rows:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in log.rows:
        status = "PASS" if ok else "FAIL"
        line = f"{status}  {name}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
