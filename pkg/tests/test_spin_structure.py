from fractions import Fraction
from math import comb

import numpy as np
import pytest
from sympy import Rational
from sympy.physics.quantum.cg import CG

from jumpfeedback import hilbert as h
from jumpfeedback import spin_structure as ss
from jumpfeedback.spin_structure import HALF


def _svd_null_dimension(n):
    stacked = np.vstack([h.collective("-", n), h.collective("+", n)])
    s = np.linalg.svd(stacked, compute_uv=False)
    return int(np.sum(s < 1e-9)) + max(0, 2**n - len(s))


@pytest.mark.parametrize("twice_j", range(0, 12))
def test_cg_coefficients_match_sympy(twice_j):
    j = Fraction(twice_j, 2)
    for big_j in (j + HALF, j - HALF):
        if big_j < 0:
            continue
        m = -big_j
        while m <= big_j:
            for up in (True, False):
                m1 = m - HALF if up else m + HALF
                if abs(m1) > j:
                    continue
                ref = CG(Rational(twice_j, 2), Rational(m1.numerator, m1.denominator),
                         Rational(1, 2), Rational(1 if up else -1, 2),
                         Rational(big_j.numerator, big_j.denominator),
                         Rational(m.numerator, m.denominator)).doit()
                assert ss._cg_up(j, m, big_j, up) == pytest.approx(float(ref), abs=1e-14)
            m += 1


def test_single_qubit_basis_is_identity():
    b = ss.build_coupled_basis(1)
    assert [(l.J, l.Jz) for l in b.labels] == [(HALF, -HALF), (HALF, HALF)]
    np.testing.assert_array_equal(b.transform, np.eye(2))


def test_two_qubits_triplet_and_singlet():
    b = ss.build_coupled_basis(2)
    assert b.multiplicities() == {1: 1, 0: 1}
    singlet = b.sector_vectors(ss.SubspaceLabel(Fraction(0), (Fraction(0),)))[:, 0]
    ref = (h.basis_state("ge") - h.basis_state("eg")) / np.sqrt(2)
    assert abs(abs(np.vdot(ref, singlet)) - 1) < 1e-12


def test_four_qubit_multiplicities(basis4):
    # dimension count: sum over J of (#ladders) * (2J+1) must be 16
    mult = basis4.multiplicities()
    assert mult == {2: 1, 1: 3, 0: 2}
    assert sum(k * (2 * j + 1) for j, k in mult.items()) == 16


@pytest.mark.parametrize("n", range(1, 9))
def test_completeness_and_unitarity(n):
    b = ss.build_coupled_basis(n)
    assert sum(k * (2 * j + 1) for j, k in b.multiplicities().items()) == 2**n
    v = b.transform
    assert np.abs(v.conj().T @ v - np.eye(2**n)).max() < 1e-10


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_eigenvalues_and_ladder_action(n):
    b = ss.build_coupled_basis(n)
    jp, jm = h.collective("+", n), h.collective("-", n)
    jz, j2 = h.spin_component("z", n), h.total_spin_squared(n)
    for k, lab in enumerate(b.labels):
        v = b.transform[:, k]
        J, m = float(lab.J), float(lab.Jz)
        assert np.abs(j2 @ v - J * (J + 1) * v).max() < 1e-8
        assert np.abs(jz @ v - m * v).max() < 1e-8
        up = jp @ v
        down = jm @ v
        if lab.Jz < lab.J:
            ref = np.sqrt((J - m) * (J + m + 1)) * b.vector(lab.J, lab.Jz + 1, lab.lam)
            assert np.abs(up - ref).max() < 1e-8
        else:
            assert np.abs(up).max() < 1e-10
        if lab.Jz > -lab.J:
            ref = np.sqrt((J + m) * (J - m + 1)) * b.vector(lab.J, lab.Jz - 1, lab.lam)
            assert np.abs(down - ref).max() < 1e-8
        else:
            assert np.abs(down).max() < 1e-10
        assert np.abs(jp @ down - (J + m) * (J - m + 1) * v).max() < 1e-8


def test_labels_deterministic():
    a = ss.build_coupled_basis(4)
    ss.build_coupled_basis.cache_clear()
    b = ss.build_coupled_basis(4)
    assert a.labels == b.labels
    np.testing.assert_array_equal(a.transform, b.transform)


@pytest.mark.parametrize("n", [0, 13])
def test_build_rejects_out_of_range(n):
    with pytest.raises(ValueError):
        ss.build_coupled_basis(n)


@pytest.mark.parametrize("n, expected", [(2, 1), (4, 2), (6, 5), (8, 14)])
def test_dark_basis_dimension(n, expected):
    vecs = ss.dark_basis(n)
    assert len(vecs) == expected == _svd_null_dimension(n)
    assert expected == comb(n, n // 2) - comb(n, n // 2 - 1)
    m = np.array(vecs)
    assert np.abs(m.conj() @ m.T - np.eye(expected)).max() < 1e-10


@pytest.mark.parametrize("n", [2, 4, 6])
def test_dark_basis_total_spin_zero(n):
    ops = [h.spin_component(a, n) for a in "xyz"] + [h.collective("-", n), h.collective("+", n)]
    for v in ss.dark_basis(n):
        for op in ops:
            assert np.abs(op @ v).max() < 1e-10


def test_dark_basis_odd_n():
    with pytest.raises(ValueError, match="no singlet"):
        ss.dark_basis(3)


def test_bell_bell_parameter_choice():
    expected = (h.basis_state("gege") - h.basis_state("geeg") - h.basis_state("egge")
                + h.basis_state("egeg")) / 2
    np.testing.assert_allclose(ss.singlet_state(0, 0.5, 0, 0), expected, atol=1e-15)


def test_singlet_state_family_in_dark_span():
    rng = np.random.default_rng(7)
    d = np.array(ss.dark_basis(4))
    for _ in range(20):
        psi = ss.singlet_state(*rng.normal(size=2), *rng.uniform(0, 2 * np.pi, size=2))
        assert abs(np.linalg.norm(psi) - 1) < 1e-12
        assert np.linalg.norm(psi - d.T @ (d.conj() @ psi)) < 1e-10


def test_singlet_state_zero_parameters():
    with pytest.raises(ValueError):
        ss.singlet_state(0, 0, 1, 1)


def test_target_is_dark_complement_of_bell_bell(bell_bell, target):
    d = np.array(ss.dark_basis(4))
    comp = d.T @ (d.conj() @ target)
    assert np.linalg.norm(comp - target) < 1e-12
    assert abs(np.vdot(bell_bell, target)) < 1e-15
    # the unique dark state orthogonal to the Bell-pair product
    rest = d.T @ (d.conj() @ np.eye(16))
    proj = rest - np.outer(bell_bell, bell_bell.conj())
    w, v = np.linalg.eigh(proj)
    assert abs(abs(np.vdot(v[:, -1], target)) - 1) < 1e-12
    raw = (2 * h.basis_state("ggee") + 2 * h.basis_state("eegg") - h.basis_state("gege")
           - h.basis_state("geeg") - h.basis_state("egge") - h.basis_state("egeg")) / np.sqrt(12)
    np.testing.assert_allclose(target, raw, atol=1e-15)


def test_block_decompose_lowering_keeps_sectors(basis4):
    blocks = ss.block_decompose(h.collective("-", 4), basis4)
    assert all(r == c for r, c in ss.nonzero_blocks(blocks))


def test_block_decompose_identity_diagonal(basis4):
    blocks = ss.block_decompose(np.eye(16), basis4)
    assert ss.nonzero_blocks(blocks) == {(s, s) for s in basis4.sectors}


def test_block_decompose_local_rotation_mixes_j(basis4):
    u = h.embed_single(np.cos(np.pi / 4) * np.eye(2) + 1j * np.sin(np.pi / 4) * h.SIGMA_X, 1, 4)
    pairs = ss.nonzero_blocks(ss.block_decompose(u, basis4))
    assert any(r.J == 2 and c.J == 1 for r, c in pairs)


def test_block_decompose_mismatch(basis4):
    with pytest.raises(ValueError):
        ss.block_decompose(np.eye(8), basis4)


def test_json_round_trip(basis4):
    text = basis4.to_json()
    back = ss.CoupledBasis.from_json(text)
    assert back.labels == basis4.labels
    np.testing.assert_array_equal(back.transform, basis4.transform)
    assert "J=1,Jz=0,lam=(1,1/2,1)" in text
