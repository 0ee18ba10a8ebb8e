import pytest

from greenbench import Device, load_device
from greenbench.metrics import WeightProfile

TABLE2_LOADS = [0.0, 0.10, 0.30, 0.50, 0.80, 1.0]
TABLE2_POWERS = [768.0, 790.0, 801.0, 816.0, 842.0, 863.0]


@pytest.fixture
def table2_model():
    return load_device("table2_router.json")


@pytest.fixture
def table2(table2_model):
    return Device(table2_model)


@pytest.fixture
def verizon():
    return WeightProfile.verizon()


def pytest_terminal_summary(terminalreporter):
    from .test_acceptance import CRITERIA

    outcomes = {}
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            name = getattr(rep, "nodeid", "").rpartition("::")[2]
            if name in CRITERIA and "test_acceptance.py" in rep.nodeid:
                if status != "passed" or rep.when == "call":
                    outcomes[name] = "PASS" if status == "passed" else "FAIL"
    if not outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for name, title in CRITERIA.items():
        if name in outcomes:
            terminalreporter.write_line(f"{outcomes[name]}  {title}")
