"""State and operator algebra on the 2**N computational basis of N qubits.

Basis ordering: bitstrings with qubit 1 as the most significant bit,
``|g> = 0`` and ``|e> = 1``.  ``sigma_z |e> = +|e>``.

States and operators are plain complex numpy arrays.  Arrays returned from
the cached constructors are read-only so they can be shared freely.
"""

from __future__ import annotations

from functools import lru_cache, reduce

import numpy as np

SIGMA_MINUS = np.array([[0, 1], [0, 0]], dtype=complex)  # |g><e|
SIGMA_PLUS = SIGMA_MINUS.T.copy()
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[-1, 0], [0, 1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

_SINGLE = {
    "+": SIGMA_PLUS,
    "-": SIGMA_MINUS,
    "x": SIGMA_X,
    "y": SIGMA_Y,
    "z": SIGMA_Z,
}

for _m in (SIGMA_MINUS, SIGMA_PLUS, SIGMA_X, SIGMA_Y, SIGMA_Z, IDENTITY_2):
    _m.flags.writeable = False


def n_qubits(x: np.ndarray) -> int:
    """Number of qubits implied by the leading dimension of a state or operator."""
    dim = x.shape[0]
    n = dim.bit_length() - 1
    if dim < 2 or 1 << n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def embed_single(op2: np.ndarray, j: int, n: int) -> np.ndarray:
    """Embed a 2x2 operator on qubit ``j`` (1-based) of an ``n``-qubit register."""
    op2 = np.asarray(op2, dtype=complex)
    if op2.shape != (2, 2):
        raise ValueError("single-qubit operator must be 2x2")
    if not 1 <= j <= n:
        raise IndexError(f"qubit index {j} out of range 1..{n}")
    left = np.eye(1 << (j - 1), dtype=complex)
    right = np.eye(1 << (n - j), dtype=complex)
    return np.kron(np.kron(left, op2), right)


@lru_cache(maxsize=None)
def site_operator(kind: str, j: int, n: int) -> np.ndarray:
    """Cached, read-only ``embed_single`` of a named Pauli/ladder operator."""
    return _frozen(embed_single(_SINGLE[kind], j, n))


@lru_cache(maxsize=None)
def collective(kind: str, n: int) -> np.ndarray:
    """Sum of ``sigma_kind`` over all ``n`` sites.

    ``kind`` is one of ``'+'``, ``'-'``, ``'x'``, ``'y'``, ``'z'``.  Note that
    ``collective('z', n)`` is ``2 J_z`` in angular-momentum units; see
    :func:`spin_component` for the ``J`` operators themselves.
    """
    if kind not in _SINGLE:
        raise ValueError(f"unknown collective operator kind {kind!r}")
    if n < 1:
        raise ValueError("need at least one qubit")
    out = reduce(np.add, (embed_single(_SINGLE[kind], j, n) for j in range(1, n + 1)))
    return _frozen(out)


@lru_cache(maxsize=None)
def spin_component(axis: str, n: int) -> np.ndarray:
    """Total angular momentum component ``J_axis = sum_j sigma_axis / 2``."""
    if axis not in ("x", "y", "z"):
        raise ValueError(f"unknown axis {axis!r}")
    return _frozen(collective(axis, n) / 2)


@lru_cache(maxsize=None)
def total_spin_squared(n: int) -> np.ndarray:
    """``J^2 = J_+ J_- + J_z^2 - J_z``."""
    jp, jm = collective("+", n), collective("-", n)
    jz = spin_component("z", n)
    return _frozen(jp @ jm + jz @ jz - jz)


def basis_state(bits: str) -> np.ndarray:
    """Computational basis state from a string of ``g``/``e`` (or ``0``/``1``)."""
    table = str.maketrans("ge", "01")
    b = bits.translate(table)
    if not b or set(b) - {"0", "1"}:
        raise ValueError(f"invalid basis label {bits!r}")
    psi = np.zeros(1 << len(b), dtype=complex)
    psi[int(b, 2)] = 1.0
    return psi


def bitstring(index: int, n: int) -> str:
    return format(index, f"0{n}b").translate(str.maketrans("01", "ge"))


def state_from_amplitudes(amps: dict[str, complex]) -> np.ndarray:
    """Normalized state from a ``{'gege': amp, ...}`` mapping."""
    n = len(next(iter(amps)))
    psi = np.zeros(1 << n, dtype=complex)
    for label, a in amps.items():
        psi += a * basis_state(label)
    return normalize(psi)


def normalize(psi: np.ndarray) -> np.ndarray:
    nrm = np.linalg.norm(psi)
    if nrm == 0:
        raise ValueError("cannot normalize the zero vector")
    return psi / nrm


def projector(psi: np.ndarray) -> np.ndarray:
    return np.outer(psi, psi.conj())


def maximally_mixed(n: int) -> np.ndarray:
    d = 1 << n
    return np.eye(d, dtype=complex) / d


def dissipator(c: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Lindblad dissipator ``c rho c^+ - (c^+ c rho + rho c^+ c) / 2``."""
    if c.shape != rho.shape or c.shape[0] != c.shape[1]:
        raise ValueError(f"dimension mismatch: {c.shape} vs {rho.shape}")
    cd = c.conj().T
    cdc = cd @ c
    return c @ rho @ cd - 0.5 * (cdc @ rho + rho @ cdc)


def expectation(a: np.ndarray, state: np.ndarray) -> complex:
    """``<psi|A|psi>`` for a state vector or ``tr(A rho)`` for a density matrix."""
    if state.shape[0] != a.shape[0]:
        raise ValueError(f"dimension mismatch: {a.shape} vs {state.shape}")
    if state.ndim == 1:
        return complex(np.vdot(state, a @ state))
    if state.shape != a.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {state.shape}")
    return complex(np.einsum("ij,ji->", a, state))


def is_hermitian(a: np.ndarray, tol: float = 1e-10) -> bool:
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= tol)


def is_unitary(u: np.ndarray, tol: float = 1e-10) -> bool:
    eye = np.eye(u.shape[0])
    return bool(np.max(np.abs(u.conj().T @ u - eye)) <= tol)


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """``||a - b||_1 / 2`` for Hermitian ``a``, ``b``."""
    diff = a - b
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(diff)).sum())


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.einsum("ij,ji->", rho, rho)))
