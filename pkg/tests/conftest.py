from hypothesis import settings

settings.register_profile("apstlab", deadline=None, print_blob=True)
settings.load_profile("apstlab")

ACCEPTANCE_FILE = "test_acceptance.py"
_results: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    if ACCEPTANCE_FILE not in report.nodeid:
        return
    marker = report.nodeid.rsplit("::", 1)[-1]
    if not marker.startswith("test_criterion_"):
        return
    number = int(marker.split("_")[2])
    failed = report.failed
    if report.when == "call" or failed:
        previous = _results.get(number, ("PASS", marker))[0]
        _results[number] = ("FAIL" if failed or previous == "FAIL" else "PASS", marker)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        outcome, name = _results[number]
        terminalreporter.write_line(f"criterion {number:2d}: {outcome}  ({name})")
