import time

import numpy as np
import pytest

from stargraph import build_graph, sample_function


@pytest.fixture
def small_graph():
    return build_graph(3, 20.0, 256)


@pytest.fixture
def medium_graph():
    return build_graph(3, 60.0, 1024)


@pytest.fixture
def bump(medium_graph):
    return sample_function(medium_graph, "gaussian-bump", center=10.0, width=2.0, dirichlet=True)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# ------------------------------------------------------- acceptance report

_ACCEPTANCE = {}


class CriterionReport:
    """Collects the sub-checks of one acceptance criterion."""

    def __init__(self, number, title, budget_s):
        self.number, self.title, self.budget_s = number, title, budget_s
        self.items = []
        self.start = time.perf_counter()
        self.final_elapsed = None

    @property
    def elapsed(self):
        if self.final_elapsed is not None:
            return self.final_elapsed
        return time.perf_counter() - self.start

    def check(self, name, value, passed, target):
        self.items.append((name, value, bool(passed), target))
        return bool(passed)

    @property
    def passed(self):
        within = self.budget_s is None or self.elapsed <= self.budget_s
        return bool(self.items) and all(i[2] for i in self.items) and within

    def failures(self):
        out = [f"{n}: {v} (want {t})" for n, v, ok, t in self.items if not ok]
        if self.budget_s is not None and self.elapsed > self.budget_s:
            out.append(f"wall time {self.elapsed:.0f}s exceeds {self.budget_s}s")
        return out


@pytest.fixture
def criterion(request):
    marker = request.node.get_closest_marker("criterion")
    number, title, budget = marker.args
    report = CriterionReport(number, title, budget)
    _ACCEPTANCE[number] = report
    yield report
    report.final_elapsed = time.perf_counter() - report.start


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title, budget_s): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        r = _ACCEPTANCE[number]
        status = "PASS" if r.passed else "FAIL"
        elapsed = f"{r.elapsed:.0f}s"
        budget = f"/{r.budget_s}s" if r.budget_s else ""
        tr.write_line(f"criterion {number:>2} {status}  {r.title}  [{elapsed}{budget}]")
        for name, value, ok, target in r.items:
            tr.write_line(f"      {'ok  ' if ok else 'FAIL'} {name}: {_fmt(value)} (want {target})")
    missing = [n for n in range(1, 11) if n not in _ACCEPTANCE]
    if missing:
        tr.write_line(f"not run: criteria {missing}")


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)
