import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    order = [k for k, _ in mod.CRITERIA]
    for key in order:
        if key in mod.RESULTS:
            ok, detail = mod.RESULTS[key]
            terminalreporter.write_line(mod.format_line(key, ok, detail))
