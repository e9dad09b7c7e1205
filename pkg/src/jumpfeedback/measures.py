"""Entanglement and fidelity diagnostics."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import hilbert
from ._backend import kernels
from .spin_structure import dark_basis


def concurrence_cap(n: int) -> float:
    """Largest value the N-concurrence can take for ``n`` qubits."""
    return 2 ** (1 - n / 2) * math.sqrt(2**n - 2)


def reduction_purities(psi: np.ndarray, backend=None) -> np.ndarray:
    """Purities of all ``2**n`` subsystem reductions, indexed by bit mask."""
    n = hilbert.n_qubits(psi)
    kern = backend or kernels
    return kern.subset_purities(np.ascontiguousarray(psi, dtype=complex), n)


def cn_concurrence(psi: np.ndarray, backend=None) -> float:
    r"""N-qubit concurrence of a pure state.

    .. math::

        C_N = 2^{1-N/2} \sqrt{(2^N - 2)\langle\psi|\psi\rangle^2
              - \sum_\alpha \mathrm{tr}\,\rho_\alpha^2}

    with the sum over all proper, nonempty subsets of qubits.
    """
    n = hilbert.n_qubits(psi)
    if n < 2:
        raise ValueError("concurrence needs at least two qubits")
    pur = reduction_purities(psi, backend)
    norm2 = float(np.vdot(psi, psi).real)
    val = (2**n - 2) * norm2**2 - (pur.sum() - pur[0] - pur[-1])
    return 2 ** (1 - n / 2) * math.sqrt(max(val, 0.0))


def reference_state(kind: str, n: int) -> np.ndarray:
    """GHZ, W or linear-cluster state on ``n`` qubits."""
    if n < 2:
        raise ValueError("need at least two qubits")
    d = 1 << n
    if kind == "ghz":
        psi = np.zeros(d, dtype=complex)
        psi[0] = psi[-1] = 1 / math.sqrt(2)
        return psi
    if kind == "w":
        psi = np.zeros(d, dtype=complex)
        psi[[1 << k for k in range(n)]] = 1 / math.sqrt(n)
        return psi
    if kind == "linear_cluster":
        # CZ on every neighbouring pair of |+>^n: phase (-1)^(# adjacent 11 pairs)
        idx = np.arange(d)
        pairs = idx & (idx >> 1)
        signs = np.array([(-1) ** bin(p).count("1") for p in pairs])
        return signs.astype(complex) / math.sqrt(d)
    raise ValueError(f"unknown reference state {kind!r}")


def overlap(state: np.ndarray, target: np.ndarray) -> float:
    """``|<t|psi>|^2`` for a vector, ``<t|rho|t>`` for a density matrix."""
    if state.shape[0] != target.shape[0]:
        raise ValueError(f"dimension mismatch: {state.shape} vs {target.shape}")
    if state.ndim == 1:
        return float(abs(np.vdot(target, state)) ** 2)
    return float(np.vdot(target, state @ target).real)


@dataclass
class ConcurrenceRange:
    minimum: float
    maximum: float
    argmin: np.ndarray = field(repr=False)
    argmax: np.ndarray = field(repr=False)
    n_restarts: int = 0
    seed: int = 0
    minima: np.ndarray = field(default=None, repr=False)
    maxima: np.ndarray = field(default=None, repr=False)


SUPPORTED_RANGE_N = (2, 4, 6, 8)


def _optimise(basis: np.ndarray, sign: float, seed: int, tol: float) -> tuple[float, np.ndarray]:
    d = basis.shape[1]

    def state(x):
        c = x[:d] + 1j * x[d:]
        return basis @ (c / np.linalg.norm(c))

    def objective(x):
        if not np.any(x):
            return 0.0
        return sign * cn_concurrence(state(x))

    x0 = np.random.default_rng(seed).normal(size=2 * d)
    res = minimize(
        objective, x0, method="Nelder-Mead",
        options={"xatol": 1e-8, "fatol": tol * 1e-2, "maxiter": 4000 * d, "maxfev": 8000 * d, "adaptive": d > 2},
    )
    # restart once from the optimum; Nelder-Mead can stall on a degenerate simplex
    res = minimize(objective, res.x, method="Nelder-Mead",
                   options={"xatol": 1e-9, "fatol": tol * 1e-3, "maxiter": 4000 * d, "adaptive": d > 2})
    return sign * res.fun, state(res.x)


def dark_concurrence_range(
    n: int, n_restarts: int = 100, seed: int = 0, tol: float = 1e-6, threads: int = 1
) -> ConcurrenceRange:
    """Minimum and maximum N-concurrence over the many-body singlets.

    Multi-start Nelder-Mead over normalized complex coefficients in the dark
    basis; restart ``k`` draws its initial point from seed ``seed + k``.
    """
    if n not in SUPPORTED_RANGE_N:
        raise ValueError(f"n must be one of {SUPPORTED_RANGE_N}")
    basis = np.array(dark_basis(n)).T
    if basis.shape[1] == 1:
        v = basis[:, 0]
        c = cn_concurrence(v)
        return ConcurrenceRange(c, c, v, v, 1, seed, np.array([c]), np.array([c]))

    def run(k):
        lo = _optimise(basis, 1.0, seed + k, tol)
        hi = _optimise(basis, -1.0, seed + k, tol)
        return lo, hi

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(run, range(n_restarts)))
    else:
        results = [run(k) for k in range(n_restarts)]
    minima = np.array([lo[0] for lo, _ in results])
    maxima = np.array([hi[0] for _, hi in results])
    i, j = int(np.argmin(minima)), int(np.argmax(maxima))
    return ConcurrenceRange(
        float(minima[i]), float(maxima[j]), results[i][0][1], results[j][1][1],
        n_restarts, seed, minima, maxima,
    )
