"""Coupled angular-momentum basis ``|J, J_z, lambda>`` for N spin-1/2 sites.

The basis is built by coupling one qubit at a time (Condon-Shortley phases at
every step).  ``lambda`` is the coupling history: the intermediate total spin
after each added qubit, starting from qubit 2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import NamedTuple

import numpy as np

from . import hilbert

HALF = Fraction(1, 2)
MAX_QUBITS = 12


def _fmt(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


class SubspaceLabel(NamedTuple):
    """One invariant ladder ``{(J, J_z, lam): J_z = -J..J}``."""

    J: Fraction
    lam: tuple[Fraction, ...]

    def __str__(self) -> str:
        return f"J={_fmt(self.J)},lam=({','.join(_fmt(j) for j in self.lam)})"


class StateLabel(NamedTuple):
    J: Fraction
    Jz: Fraction
    lam: tuple[Fraction, ...]

    @property
    def sector(self) -> SubspaceLabel:
        return SubspaceLabel(self.J, self.lam)

    def __str__(self) -> str:
        lam = ",".join(_fmt(j) for j in self.lam)
        return f"J={_fmt(self.J)},Jz={_fmt(self.Jz)},lam=({lam})"


@dataclass(frozen=True)
class CoupledBasis:
    """Coupled basis for ``n`` qubits.

    ``transform[:, k]`` is the computational-basis expansion of ``labels[k]``.
    Labels are grouped by sector (``J`` descending, then ``lam``) with ``J_z``
    ascending inside each sector.
    """

    n: int
    labels: tuple[StateLabel, ...]
    transform: np.ndarray = field(repr=False)

    @property
    def sectors(self) -> list[SubspaceLabel]:
        seen: dict[SubspaceLabel, None] = {}
        for lab in self.labels:
            seen.setdefault(lab.sector)
        return list(seen)

    def sector_indices(self, sector: SubspaceLabel) -> np.ndarray:
        return np.array([k for k, lab in enumerate(self.labels) if lab.sector == sector])

    def sector_vectors(self, sector: SubspaceLabel) -> np.ndarray:
        """Columns of the sector, ordered by ascending ``J_z``."""
        return self.transform[:, self.sector_indices(sector)]

    def vector(self, J, Jz, lam) -> np.ndarray:
        key = StateLabel(Fraction(J), Fraction(Jz), tuple(Fraction(j) for j in lam))
        return self.transform[:, self.labels.index(key)]

    def multiplicities(self) -> dict[Fraction, int]:
        out: dict[Fraction, int] = {}
        for s in self.sectors:
            out[s.J] = out.get(s.J, 0) + 1
        return out

    def to_json(self) -> str:
        """Labels as strings plus the transform as row-major ``[re, im]`` pairs."""
        t = self.transform
        doc = {
            "n_qubits": self.n,
            "labels": [str(lab) for lab in self.labels],
            "transform": [[[float(z.real), float(z.imag)] for z in row] for row in t],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> CoupledBasis:
        doc = json.loads(text)
        labels = tuple(_parse_label(s) for s in doc["labels"])
        arr = np.asarray(doc["transform"], dtype=float)
        transform = arr[..., 0] + 1j * arr[..., 1]
        transform.flags.writeable = False
        return cls(doc["n_qubits"], labels, transform)


def _parse_label(s: str) -> StateLabel:
    head, lam = s.split(",lam=")
    j, jz = (Fraction(part.split("=")[1]) for part in head.split(","))
    lam_vals = tuple(Fraction(x) for x in lam.strip("()").split(","))
    return StateLabel(j, jz, lam_vals)


def _cg_up(j: Fraction, m: Fraction, big_j: Fraction, sign_up: bool) -> float:
    """Clebsch-Gordan coefficient ``<j, m - s; 1/2, s | J, m>`` for ``j x 1/2``.

    ``sign_up`` selects the added spin ``s = +1/2`` (excited) or ``-1/2``.
    """
    denom = 2 * j + 1
    if big_j == j + HALF:
        num = j + m + HALF if sign_up else j - m + HALF
        return math.sqrt(num / denom)
    num = j - m + HALF if sign_up else j + m + HALF
    val = math.sqrt(num / denom)
    return -val if sign_up else val


@lru_cache(maxsize=None)
def build_coupled_basis(n: int) -> CoupledBasis:
    """Coupled basis of ``n`` spin-1/2 sites by sequential coupling."""
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"n must be in 1..{MAX_QUBITS}, got {n}")
    g, e = np.array([1.0, 0.0]), np.array([0.0, 1.0])
    # history -> {m: vector}
    ladders: dict[tuple[Fraction, ...], dict[Fraction, np.ndarray]] = {
        (HALF,): {-HALF: g, HALF: e}
    }
    for k in range(2, n + 1):
        new: dict[tuple[Fraction, ...], dict[Fraction, np.ndarray]] = {}
        for hist, states in ladders.items():
            j = hist[-1]
            for big_j in (j + HALF, j - HALF):
                if big_j < 0:
                    continue
                out = {}
                m = -big_j
                while m <= big_j:
                    vec = np.zeros(2**k)
                    if m - HALF in states:
                        vec += _cg_up(j, m, big_j, True) * np.kron(states[m - HALF], e)
                    if m + HALF in states:
                        vec += _cg_up(j, m, big_j, False) * np.kron(states[m + HALF], g)
                    out[m] = vec
                    m += 1
                new[hist + (big_j,)] = out
        ladders = new

    def history(h: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
        return h if n == 1 else h[1:]

    order = sorted(ladders, key=lambda h: (-h[-1], tuple(-x for x in history(h))))
    labels: list[StateLabel] = []
    cols: list[np.ndarray] = []
    for h in order:
        for m in sorted(ladders[h]):
            labels.append(StateLabel(h[-1], m, history(h)))
            cols.append(ladders[h][m])
    transform = np.array(cols, dtype=complex).T
    transform.flags.writeable = False
    return CoupledBasis(n, tuple(labels), transform)


def singlet_dimension(n: int) -> int:
    """Number of linearly independent total-spin-zero states of ``n`` qubits."""
    if n % 2:
        return 0
    return comb(n, n // 2) - comb(n, n // 2 - 1)


def dark_basis(n: int) -> list[np.ndarray]:
    """Orthonormal basis of states annihilated by both ``J_-`` and ``J_+``."""
    if n % 2:
        raise ValueError(f"no singlet sector for odd n={n}")
    basis = build_coupled_basis(n)
    return [basis.transform[:, k].copy() for k, lab in enumerate(basis.labels) if lab.J == 0]


def dark_projector(n: int) -> np.ndarray:
    vecs = np.array(dark_basis(n)).T
    return vecs @ vecs.conj().T


def singlet_state(alpha: float, beta: float, theta: float, phi: float) -> np.ndarray:
    """Four-qubit many-body singlet parametrised by two complex weights.

    The state is ``a (|ggee> + |eegg>) + b (|gege> + |egeg>)
    - (a + b)(|geeg> + |egge>)`` with ``a = alpha e^{i theta}``,
    ``b = beta e^{i phi}``, normalized.
    """
    if alpha == 0 and beta == 0:
        raise ValueError("alpha and beta cannot both be zero")
    a = alpha * np.exp(1j * theta)
    b = beta * np.exp(1j * phi)
    return hilbert.state_from_amplitudes(
        {"ggee": a, "gege": b, "geeg": -(a + b), "egge": -(a + b), "egeg": b, "eegg": a}
    )


def bell_bell_state() -> np.ndarray:
    """Product of two antisymmetric Bell pairs on qubits (1,2) and (3,4)."""
    return singlet_state(0.0, 0.5, 0.0, 0.0)


def target_singlet() -> np.ndarray:
    """The four-qubit singlet orthogonal to :func:`bell_bell_state`."""
    return hilbert.state_from_amplitudes(
        {"ggee": 2, "eegg": 2, "gege": -1, "geeg": -1, "egge": -1, "egeg": -1}
    )


def block_decompose(a: np.ndarray, basis: CoupledBasis) -> dict[tuple[SubspaceLabel, SubspaceLabel], np.ndarray]:
    """Blocks of ``V^+ A V`` indexed by ``(row sector, column sector)``."""
    if a.shape != basis.transform.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {basis.transform.shape}")
    v = basis.transform
    full = v.conj().T @ a @ v
    idx = {s: basis.sector_indices(s) for s in basis.sectors}
    return {(r, c): full[np.ix_(ir, ic)] for r, ir in idx.items() for c, ic in idx.items()}


def nonzero_blocks(blocks, tol: float = 1e-10) -> set[tuple[SubspaceLabel, SubspaceLabel]]:
    return {key for key, blk in blocks.items() if blk.size and np.max(np.abs(blk)) >= tol}
