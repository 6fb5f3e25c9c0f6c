import pytest

from tamper2d.bench.scenario import load, shipped_dir


@pytest.fixture(scope="session")
def scenario_dir():
    return shipped_dir()


@pytest.fixture(scope="session")
def horizontal(scenario_dir):
    return load(scenario_dir / "horizontal" / "horizontal-01.yaml")


@pytest.fixture(scope="session")
def kitchen(scenario_dir):
    return load(scenario_dir / "kitchen" / "kitchen-01.yaml")


@pytest.fixture(scope="session")
def grocery(scenario_dir):
    return load(scenario_dir / "grocery" / "grocery.yaml")


VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion."""
    lines = request.config.stash.setdefault(VERDICTS, [])

    def record(label: str, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'} criterion {label}: {detail}"
        lines.append((label, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines, key=lambda x: (int(x[0].split(".")[0]), x[0])):
            terminalreporter.write_line(line)
