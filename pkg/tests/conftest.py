import numpy as np
import pytest

from randers_soliton import lie_algebra as la
from randers_soliton.randers import RandersStructure

ALGEBRAS = {
    "abelian": la.abelian(3),
    "h3": la.heisenberg(1),
    "h5": la.heisenberg(2),
    "f4": la.filiform4(),
}


def structure(name, X=None, A=None):
    alg = ALGEBRAS[name]
    n = alg.dim
    return RandersStructure(alg, np.eye(n) if A is None else A, np.zeros(n) if X is None else X)


def random_spd(rng, n, spread=0.3):
    Q = np.linalg.qr(rng.normal(size=(n, n)))[0]
    return Q @ np.diag(np.exp(rng.uniform(-spread, spread, n))) @ Q.T


def random_admissible(rng, A, max_norm=0.6):
    v = rng.normal(size=A.shape[0])
    return v / np.sqrt(v @ A @ v) * rng.uniform(0.05, max_norm)


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Recorder for acceptance verdicts, echoed in the terminal summary."""
    store = request.config.stash.setdefault(_ACCEPTANCE_KEY, [])

    def record(number, passed, detail):
        store.append((number, passed, detail))
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}")

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(lines, key=lambda r: r[0]):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}")
