from collections import OrderedDict

import pytest

_CRITERIA: "OrderedDict[int, dict]" = OrderedDict()


@pytest.fixture
def criterion():
    """Record a sub-check of an acceptance criterion: ``criterion(id, title, ok, detail)``."""

    def record(cid: int, title: str, ok: bool, detail: str) -> bool:
        c = _CRITERIA.setdefault(cid, {"title": title, "ok": True, "details": []})
        c["ok"] = c["ok"] and bool(ok)
        c["details"].append(("ok" if ok else "FAIL") + " " + detail)
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(_CRITERIA):
        c = _CRITERIA[cid]
        terminalreporter.write_line(f"{'PASS' if c['ok'] else 'FAIL'} criterion {cid}: {c['title']}")
        for d in c["details"]:
            terminalreporter.write_line(f"    {d}")
