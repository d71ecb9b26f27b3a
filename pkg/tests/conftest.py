import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=500,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# criterion number -> [title, outcomes, seconds]
_acceptance: dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        rep.criterion = m.args


def pytest_runtest_logreport(report):
    crit = getattr(report, "criterion", None)
    if crit is None or not (report.when == "call" or report.skipped or report.failed):
        return
    entry = _acceptance.setdefault(crit[0], [crit[1], [], 0.0])
    entry[1].append("SKIP" if report.skipped else "FAIL" if report.failed else "PASS")
    entry[2] += report.duration


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_acceptance):
        title, outcomes, secs = _acceptance[n]
        if "FAIL" in outcomes:
            verdict = "FAIL"
        elif all(o == "SKIP" for o in outcomes):
            verdict = "SKIP"
        else:
            verdict = "PASS"
        terminalreporter.write_line(f"criterion {n:>2}: {verdict}  {title}  "
                                    f"[{len(outcomes)} checks, {secs:.1f}s]")
