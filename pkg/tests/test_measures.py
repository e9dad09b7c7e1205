import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jumpfeedback import hilbert as h
from jumpfeedback import measures as m
from jumpfeedback import spin_structure as ss

from conftest import random_state, random_unitary


def _two_qubit_concurrence(psi):
    """Wootters' pure-state formula 2|ad - bc|."""
    a, b, c, d = psi
    return 2 * abs(a * d - b * c)


def test_product_state_zero(backend):
    psi = np.kron(np.kron([1, 1j], [0.6, 0.8]), np.kron([1, 0], [1, -1])) / 2
    assert m.cn_concurrence(psi, backend) == pytest.approx(0, abs=1e-7)


def test_bell_state_one(backend):
    bell = (h.basis_state("ge") - h.basis_state("eg")) / np.sqrt(2)
    assert _two_qubit_concurrence(bell) == pytest.approx(1)
    assert m.cn_concurrence(bell, backend) == pytest.approx(1, abs=1e-12)


def test_two_qubit_matches_wootters():
    rng = np.random.default_rng(11)
    for _ in range(20):
        psi = random_state(rng, 2)
        assert m.cn_concurrence(psi) == pytest.approx(_two_qubit_concurrence(psi), abs=1e-10)


def test_ghz4_value(backend):
    # every one of the 14 reductions has purity 1/2: 2^-1 sqrt(14 - 7)
    assert m.cn_concurrence(m.reference_state("ghz", 4), backend) == pytest.approx(math.sqrt(7) / 2, abs=1e-12)


def test_ghz2_is_bell():
    assert m.cn_concurrence(m.reference_state("ghz", 2)) == pytest.approx(1, abs=1e-12)


def test_w4_value():
    # subset of size k of W_N has purity (k^2 + (N-k)^2) / N^2
    n = 4
    total = sum(math.comb(n, k) * (k * k + (n - k) ** 2) / n**2 for k in range(1, n))
    expected = 2 ** (1 - n / 2) * math.sqrt(2**n - 2 - total)
    assert expected == pytest.approx(math.sqrt(6) / 2)
    assert m.cn_concurrence(m.reference_state("w", 4)) == pytest.approx(expected, abs=1e-12)


def test_linear_cluster_construction():
    psi = m.reference_state("linear_cluster", 3)
    # stabiliser X1 Z2 fixes the cluster state
    stab = h.embed_single(h.SIGMA_X, 1, 3) @ h.embed_single(h.SIGMA_Z, 2, 3)
    # sign convention: |g> is the +1 eigenvector of Z in the cluster picture, i.e. -sigma_z here
    np.testing.assert_allclose(-stab @ psi, psi, atol=1e-12)
    assert abs(np.linalg.norm(psi) - 1) < 1e-12


def test_reference_state_unknown():
    with pytest.raises(ValueError):
        m.reference_state("dicke", 4)


def test_singlets_in_published_range(target, bell_bell):
    lo, hi = math.sqrt(7) / 2, math.sqrt(2)
    for psi in (target, bell_bell):
        c = m.cn_concurrence(psi)
        assert lo - 1e-10 <= c <= hi + 1e-10


def test_concurrence_needs_two_qubits():
    with pytest.raises(ValueError):
        m.cn_concurrence(np.array([1, 0], dtype=complex))


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_local_unitary_invariance(n, seed):
    rng = np.random.default_rng(seed)
    psi = random_state(rng, n)
    u = random_unitary(rng, 2)
    for j in range(2, n + 1):
        u = np.kron(u, random_unitary(rng, 2))
    assert abs(m.cn_concurrence(u @ psi) - m.cn_concurrence(psi)) < 1e-8


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 5), st.floats(0, 2 * np.pi), st.integers(0, 2**32 - 1))
def test_global_phase_invariance(n, phase, seed):
    psi = random_state(np.random.default_rng(seed), n)
    assert m.cn_concurrence(np.exp(1j * phase) * psi) == pytest.approx(m.cn_concurrence(psi), abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_concurrence_bounded_by_cap(n, seed):
    c = m.cn_concurrence(random_state(np.random.default_rng(seed), n))
    assert 0 <= c <= m.concurrence_cap(n) + 1e-12


def test_overlap_cases(target, bell_bell):
    assert m.overlap(target, target) == pytest.approx(1)
    assert m.overlap(bell_bell, target) == pytest.approx(0, abs=1e-30)
    assert m.overlap(h.basis_state("gggg"), target) == 0
    assert m.overlap(h.projector(target), target) == pytest.approx(1)
    with pytest.raises(ValueError):
        m.overlap(np.ones(8), target)


def test_dark_range_two_qubits():
    r = m.dark_concurrence_range(2)
    assert r.minimum == r.maximum == pytest.approx(1)


def test_dark_range_four_qubits():
    r = m.dark_concurrence_range(4, n_restarts=20)
    assert r.minimum == pytest.approx(math.sqrt(7) / 2, abs=1e-4)
    assert r.maximum == pytest.approx(math.sqrt(2), abs=1e-4)
    assert m.cn_concurrence(r.argmax) == pytest.approx(r.maximum, abs=1e-12)
    assert 0 <= r.minimum <= r.maximum <= m.concurrence_cap(4)


@pytest.mark.slow
def test_dark_range_six_qubits_above_ghz():
    r = m.dark_concurrence_range(6, n_restarts=100)
    ghz6 = m.cn_concurrence(m.reference_state("ghz", 6))
    assert r.maximum > ghz6
    assert r.maximum <= m.concurrence_cap(6)


def test_dark_range_unsupported():
    with pytest.raises(ValueError):
        m.dark_concurrence_range(5)


def test_dark_range_seeded_reproducible():
    a = m.dark_concurrence_range(4, n_restarts=3, seed=9)
    b = m.dark_concurrence_range(4, n_restarts=3, seed=9)
    np.testing.assert_array_equal(a.minima, b.minima)
    np.testing.assert_array_equal(a.maxima, b.maxima)
