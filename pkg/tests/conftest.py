import numpy as np
import pytest

from jumpfeedback import _backend, spin_structure


@pytest.fixture(scope="session")
def basis4():
    return spin_structure.build_coupled_basis(4)


@pytest.fixture(scope="session")
def target():
    return spin_structure.target_singlet()


@pytest.fixture(scope="session")
def bell_bell():
    return spin_structure.bell_bell_state()


@pytest.fixture(params=_backend.available())
def backend(request):
    return _backend.get_backend(request.param)


def random_state(rng, n):
    psi = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return psi / np.linalg.norm(psi)


def random_density(rng, n, rank=3):
    vs = [random_state(rng, n) for _ in range(rank)]
    w = rng.random(rank)
    w /= w.sum()
    return sum(wk * np.outer(v, v.conj()) for wk, v in zip(w, vs))


def random_unitary(rng, d):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
