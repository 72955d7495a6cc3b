import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from pamtree.graph import homogeneous_tree
from pamtree.gw import OffspringLaw, sample_tree

settings.register_profile("pamtree", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("pamtree")


@pytest.fixture
def binary_tree():
    return homogeneous_tree(2, 4)


@pytest.fixture
def gw_law():
    return OffspringLaw("truncated-geometric", {"p": 0.5, "d_min": 2, "d_max": 4})


@pytest.fixture
def gw_tree(gw_law):
    return sample_tree(gw_law, 5, seed=3)


def brute_ball(tree, center, radius):
    """Distances by repeated neighbour expansion with Python sets."""
    seen, frontier = {center}, {center}
    for _ in range(radius):
        frontier = {int(w) for v in frontier for w in tree.neighbors(v)} - seen
        seen |= frontier
    return np.array(sorted(seen))


# ---------------------------------------------------------------------------
# acceptance reporting: one PASS/FAIL line per criterion

_CRITERIA = {}


class _Criterion:
    def __init__(self, number, title, limit):
        self.number, self.title, self.limit = number, title, limit
        self.ok, self.detail, self.elapsed = False, "", 0.0

    def line(self):
        verdict = "PASS" if self.ok and self.elapsed <= self.limit else "FAIL"
        return (f"criterion {self.number:>2} {verdict}  {self.title}  "
                f"[{self.elapsed:.1f}s / {self.limit:.0f}s]  {self.detail}")


@pytest.fixture
def criterion():
    import time
    from contextlib import contextmanager

    @contextmanager
    def record(number, title, limit):
        c = _Criterion(number, title, limit)
        start = time.perf_counter()
        try:
            yield c
        finally:
            c.elapsed = time.perf_counter() - start
            _CRITERIA[number] = c
            print(c.line())
        assert c.ok, c.detail
        assert c.elapsed <= c.limit, f"took {c.elapsed:.1f}s, limit {c.limit}s"

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n].line())
