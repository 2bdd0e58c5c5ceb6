from __future__ import annotations

import contextlib
import time

import pytest

_ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


class Checks:
    """Collects named failures so every check of a criterion runs."""

    def __init__(self) -> None:
        self.failures: list[str] = []
        self.notes: list[str] = []
        self.started = time.perf_counter()

    def check(self, condition: bool, message: str) -> bool:
        if not condition:
            self.failures.append(message)
        return bool(condition)

    def note(self, message: str) -> None:
        self.notes.append(message)

    def elapsed(self) -> float:
        return time.perf_counter() - self.started


@pytest.fixture
def criterion():
    """``with criterion(n, title) as c:`` records one summary line per criterion."""

    @contextlib.contextmanager
    def run(number: int, title: str):
        checks = Checks()
        try:
            yield checks
        except Exception as exc:
            checks.failures.append(f"{type(exc).__name__}: {exc}")
        detail = checks.failures or checks.notes
        _ACCEPTANCE[number] = (title, not checks.failures, "; ".join(detail))
        if checks.failures:
            pytest.fail("\n".join(checks.failures), pytrace=False)

    return run


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, passed, detail = _ACCEPTANCE[number]
        line = f"criterion {number} [{title}]: {'PASS' if passed else 'FAIL'}"
        if detail:
            line += f" - {detail}"
        terminalreporter.write_line(line)
