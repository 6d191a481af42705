import collections

import pytest

# criterion number -> short title, printed in the terminal summary
CRITERIA = {
    1: "footprint circularity after pitch-width solve",
    2: "four-RSU scenario slant ranges",
    3: "registration quality (ideal and realized footprints)",
    4: "ROC closed forms vs Monte Carlo and numeric integration",
    5: "single vs fused detection at p_f = 0.1, r_s = 4 m, rho = 0.1",
    6: "detection-optimal sensing-unit radius",
    7: "beamforming properties on the reduced array",
    8: "hybrid factorization residual vs RF chains",
    9: "two-circle overlap vs lens formula",
}

_results = collections.defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion the test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        measured = dict(item.user_properties).get("measured", "")
        _results[marker.args[0]].append((item.name, report.passed, measured))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, title in CRITERIA.items():
        rows = _results.get(n)
        if not rows:
            tr.write_line(f"criterion {n}: NOT RUN  {title}")
            continue
        ok = all(passed for _, passed, _ in rows)
        failed = [name for name, passed, _ in rows if not passed]
        detail = "; ".join(m for _, _, m in rows if m)
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}"
        if failed:
            line += f"  [failing: {', '.join(failed)}]"
        if detail:
            line += f"  ({detail})"
        tr.write_line(line)
