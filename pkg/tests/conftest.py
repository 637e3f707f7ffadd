import pytest

_CRITERIA: list[tuple[str, bool, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    name = getattr(item.function, "criterion", None)
    if name is None or rep.when != "call":
        return
    recorded = [r for r in _CRITERIA if r[0] == name]
    if not recorded:
        # crashed before the verdict was recorded
        _CRITERIA.append((name, False, f"error: {call.excinfo.typename if call.excinfo else 'no verdict'}"))
    elif rep.failed and all(ok for _, ok, _ in recorded):
        _CRITERIA.append((name, False, "assertion failed after verdict"))


@pytest.fixture
def verdict(request):
    """Record a PASS/FAIL line for the criterion named by the test's ``criterion`` attribute."""
    name = request.function.criterion

    def record(ok: bool, detail: str = "") -> bool:
        ok = bool(ok)
        _CRITERIA.append((name, ok, detail))
        print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
        return ok

    return record


def criterion(name):
    def mark(fn):
        fn.criterion = name
        return fn

    return mark


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    verdicts = {}
    for name, ok, detail in _CRITERIA:
        verdicts.setdefault(name, []).append((ok, detail))
    for name, items in verdicts.items():
        ok = all(o for o, _ in items)
        detail = "; ".join(d for _, d in items if d)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
