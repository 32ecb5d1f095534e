"""Print one PASS/FAIL line per acceptance criterion at the end of the run."""

_results: dict[int, list[bool]] = {}
_titles: dict[int, str] = {}


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    k = mark.args[0]
    _titles[k] = mark.kwargs.get("title", item.name)
    if call.when == "call" or (call.when == "setup" and call.excinfo is not None):
        _results.setdefault(k, []).append(call.excinfo is None)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_results):
        status = "PASS" if all(_results[k]) else "FAIL"
        terminalreporter.write_line(f"criterion {k}: {status}  {_titles[k]}")
