import re

_RESULTS = {}


def pytest_runtest_logreport(report):
    match = re.search(r"test_acceptance\.py::test_(ac\d+\w?)_(\w+)", report.nodeid)
    if not match:
        return
    key = (match.group(1).upper(), match.group(2).replace("_", " "))
    if report.failed:
        _RESULTS[key] = ("FAIL", report.duration)
    elif report.when == "call":
        _RESULTS.setdefault(key, ("PASS", report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for (tag, label), (status, duration) in sorted(_RESULTS.items()):
        terminalreporter.write_line(f"{tag:6s} {status}  {label} ({duration:.1f} s)")
