import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("ci", max_examples=25, deadline=None)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def circle2():
    from bicycle_tracks.geom import Circle, build_curve

    return build_curve(Circle(2.0))


@pytest.fixture(scope="session")
def shamrock_curve():
    from bicycle_tracks.geom import build_curve, shamrock

    return build_curve(shamrock())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_CRITERIA = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    tag = getattr(getattr(item, "function", None), "criterion", None)
    if tag is None or rep.when != "call":
        return
    number, title = tag
    if rep.passed:
        detail = getattr(item.module, "DETAILS", {}).get(number)
        line = f"CRITERION {number:2d} PASS  {title}" + (f": {detail}" if detail else "")
    else:
        msg = str(call.excinfo.value).splitlines()[0] if call.excinfo else ""
        line = f"CRITERION {number:2d} FAIL  {title}: {call.excinfo.typename if call.excinfo else ''} {msg}"
    _CRITERIA.append((number, line))


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_CRITERIA):
            terminalreporter.write_line(line)
