import numpy as np
import pytest

from cvqkd.gaussian import symplectic_form


def brute_symplectic(gamma):
    """Moduli of the eigenvalues of Omega @ gamma, one per conjugate pair, descending."""
    n = gamma.shape[0] // 2
    ev = np.abs(np.linalg.eigvals(symplectic_form(n) @ gamma))
    return np.sort(ev)[::-1][::2]


def random_symplectic(rng, n):
    """Product of random local squeezers, phase rotations and beamsplitters."""
    s = np.eye(2 * n)
    for _ in range(2 * n):
        k = rng.integers(n)
        r = rng.normal(scale=0.3)
        t = rng.uniform(0, 2 * np.pi)
        local = np.eye(2 * n)
        rot = np.array([[np.cos(t), np.sin(t)], [-np.sin(t), np.cos(t)]])
        local[2 * k:2 * k + 2, 2 * k:2 * k + 2] = rot @ np.diag([np.exp(r), np.exp(-r)])
        s = local @ s
        if n > 1:
            a, b = rng.choice(n, size=2, replace=False)
            tr = rng.uniform()
            bs = np.eye(2 * n)
            for q in (0, 1):
                i, j = 2 * a + q, 2 * b + q
                bs[i, i], bs[i, j], bs[j, i], bs[j, j] = np.sqrt(tr), np.sqrt(1 - tr), np.sqrt(1 - tr), -np.sqrt(tr)
            s = bs @ s
    return s


def random_state(rng, n, pure=False):
    """Covariance matrix with a known symplectic spectrum (Williamson form)."""
    nu = np.ones(n) if pure else 1 + rng.exponential(2.0, size=n)
    s = random_symplectic(rng, n)
    g = s @ np.diag(np.repeat(nu, 2)) @ s.T
    return (g + g.T) / 2, np.sort(nu)[::-1]


@pytest.fixture
def rng():
    return np.random.default_rng(20240617)


ACCEPTANCE_LINES = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion for the terminal summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE_LINES, [])

    def report(number, title, passed, detail):
        line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
        lines.append(line)
        print(line)
        return passed
    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
