import os
import sys
from collections import OrderedDict

sys.path.insert(0, os.path.dirname(__file__))

# criterion -> list of (item, ok, detail); filled by test_acceptance
ACCEPTANCE: "OrderedDict[str, list]" = OrderedDict()
TITLES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit, items in ACCEPTANCE.items():
        ok = all(i[1] for i in items)
        failed = [f"{name} ({detail})" for name, good, detail in items if not good]
        line = f"{'PASS' if ok else 'FAIL'} {crit}: {TITLES.get(crit, '')} [{sum(i[1] for i in items)}/{len(items)}]"
        tr.write_line(line)
        for f in failed:
            tr.write_line(f"     failed: {f}")
