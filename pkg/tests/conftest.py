import contextlib
import time

import pytest


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """``with criterion(n, title) as notes:`` records one PASS/FAIL line for the block.

    Strings appended to ``notes`` are shown on the line.
    """
    lines = request.config.acceptance_lines

    @contextlib.contextmanager
    def record(number, title):
        start = time.perf_counter()
        status, detail, notes = "FAIL", "", []
        try:
            yield notes
            status = "PASS"
        except BaseException as exc:
            detail = f"  ({type(exc).__name__}: {str(exc).splitlines()[0][:120] if str(exc) else ''})"
            raise
        finally:
            extra = f"  {'; '.join(notes)}" if notes else ""
            line = (f"criterion {number:>2} {status}  {title}  [{time.perf_counter() - start:.1f} s]"
                    f"{extra}{detail}")
            lines.append(line)
            print(line)

    return record
