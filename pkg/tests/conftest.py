import pytest

_ACCEPTANCE: dict[int, str] = {}


class Criterion:
    """Context manager that records one pass/fail line per acceptance criterion."""

    def __init__(self, number: int, title: str):
        self.number = number
        self.title = title
        self.checks: list[tuple[str, bool]] = []

    def check(self, label: str, ok) -> bool:
        self.checks.append((label, bool(ok)))
        return bool(ok)

    def __enter__(self) -> "Criterion":
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            self.checks.append((f"error {exc_type.__name__}: {exc}", False))
        ok = bool(self.checks) and all(passed for _, passed in self.checks)
        detail = "; ".join(f"{label} {'ok' if passed else 'FAILED'}" for label, passed in self.checks)
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {self.number:2d}: {self.title} -- {detail}"
        _ACCEPTANCE[self.number] = line
        print(line)
        if exc_type is None and not ok:
            raise AssertionError(line)
        return False


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[number])
