import pytest

ACCEPTANCE_LINES = []


def pytest_addoption(parser):
    parser.addoption("--heavy-traffic", action="store_true", default=False,
                     help="also run the long rho sweep 0.95..0.995 with 1e6 slots")


def pytest_configure(config):
    config.addinivalue_line("markers", "heavy_traffic: long optional sweep, enabled by --heavy-traffic")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--heavy-traffic"):
        return
    skip = pytest.mark.skip(reason="needs --heavy-traffic")
    for item in items:
        if "heavy_traffic" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
