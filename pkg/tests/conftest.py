import numpy as np
import pytest
from hypothesis import strategies as st

from tauline import ArmView, SurvivalDataset, fit_km

DATA = __import__("pathlib").Path(__file__).parent / "data"


def km(times, events=None):
    times = np.asarray(times, dtype=float)
    events = np.ones(times.size, dtype=int) if events is None else np.asarray(events)
    return fit_km(ArmView.from_unsorted(times, events))


def random_dataset(rng, n0=None, n1=None, censor=0.3, ties=False):
    n0 = n0 or int(rng.integers(2, 40))
    n1 = n1 or int(rng.integers(2, 40))
    n = n0 + n1
    t = rng.integers(1, 15, n).astype(float) if ties else rng.exponential(10.0, n)
    e = (rng.random(n) >= censor).astype(int)
    return SurvivalDataset(t, e, np.r_[np.zeros(n0, int), np.ones(n1, int)])


@st.composite
def arm_samples(draw, min_size=1, max_size=25, censoring=True):
    """(times, events) for one arm; coarse grid so ties occur."""
    n = draw(st.integers(min_size, max_size))
    times = draw(st.lists(st.integers(1, 30), min_size=n, max_size=n))
    if censoring:
        events = draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    else:
        events = [1] * n
    return np.array(times, float) / 2.0, np.array(events)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def data_dir():
    return DATA


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """``record(number, title, ok, detail)``: log a criterion outcome and assert it."""
    log = request.config.stash.setdefault(_ACCEPTANCE, [])

    def record(number, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} -- {detail}"
        log.append((number, line))
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_ACCEPTANCE, [])
    if log:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(log):
            terminalreporter.write_line(line)
