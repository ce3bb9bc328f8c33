import sys
from collections import defaultdict
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# criterion -> list of (label, passed, detail)
_RESULTS = defaultdict(list)
_TITLES = {}


class AcceptanceLog:
    """Records sub-checks of one acceptance criterion and echoes them live."""

    def __init__(self, capsys):
        self._capsys = capsys

    def title(self, key, text):
        _TITLES[key] = text

    def check(self, key, label, passed, detail=""):
        passed = bool(passed)
        _RESULTS[key].append((label, passed, detail))
        with self._capsys.disabled():
            print(f"\n  {'PASS' if passed else 'FAIL'}  {key} {label}: {detail}", flush=True)
        return passed

    def info(self, key, label, detail):
        _RESULTS[key].append((label, None, detail))


@pytest.fixture
def acceptance(capsys):
    return AcceptanceLog(capsys)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.write_sep("=", "acceptance criteria")
    for key in sorted(_RESULTS, key=lambda k: int(k[2:])):
        checks = _RESULTS[key]
        ok = all(p for _, p, _ in checks if p is not None)
        tr.write_line(f"{'PASS' if ok else 'FAIL'}  {key}  {_TITLES.get(key, '')}")
        for label, passed, detail in checks:
            tag = "info" if passed is None else ("ok" if passed else "FAIL")
            tr.write_line(f"        [{tag}] {label}: {detail}")
