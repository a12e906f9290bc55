import re

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = {}
    for key in ("failed", "error", "passed"):
        for rep in terminalreporter.stats.get(key, ()):
            match = _CRITERION.search(getattr(rep, "nodeid", ""))
            if match is None:
                continue
            num, label = int(match.group(1)), match.group(2)
            if key in ("failed", "error"):
                results[num] = (label, "FAIL")
            elif num not in results:
                results[num] = (label, "PASS")
    if not results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for num in sorted(results):
        label, status = results[num]
        terminalreporter.write_line(
            f"criterion {num:02d} ({label.replace('_', ' ')}): {status}"
        )
