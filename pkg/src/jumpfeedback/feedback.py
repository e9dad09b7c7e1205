"""Feedback unitaries applied after each collective detection, and the
sector-graph analysis that decides whether a unitary stabilises a target
dark state.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import networkx as nx
import numpy as np

from . import hilbert
from .spin_structure import CoupledBasis, build_coupled_basis, dark_basis

KINDS = ("identity", "local_drive", "epsilon_pair", "schematic_one_way", "schematic_two_way", "custom")

# Single-qubit drive generators.  "spin" uses sigma_x / 2, so a pulse area of
# A = k*pi on every atom is a global identity or global flip (the dips of the
# overlap scans); "pauli" uses sigma_x itself.
_DRIVE_SCALE = {"spin": 0.5, "pauli": 1.0}


@dataclass(frozen=True)
class FeedbackScheme:
    """Feedback unitary ``U = exp(iF)`` with its generator when known."""

    unitary: np.ndarray = field(repr=False)
    kind: str = "custom"
    generator: np.ndarray | None = field(default=None, repr=False)
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown feedback kind {self.kind!r}")
        if not hilbert.is_unitary(self.unitary):
            raise ValueError("feedback operator is not unitary")

    @property
    def n(self) -> int:
        return hilbert.n_qubits(self.unitary)

    def describe(self) -> dict[str, Any]:
        return {"kind": self.kind, "params": _jsonable(self.params)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def unitary_from_generator(f: np.ndarray) -> np.ndarray:
    """``exp(iF)`` for Hermitian ``F`` via its eigendecomposition."""
    if not hilbert.is_hermitian(f):
        raise ValueError("feedback generator must be Hermitian")
    w, v = np.linalg.eigh(0.5 * (f + f.conj().T))
    return (v * np.exp(1j * w)) @ v.conj().T


def identity_feedback(n: int) -> FeedbackScheme:
    d = 1 << n
    return FeedbackScheme(np.eye(d, dtype=complex), "identity", np.zeros((d, d), dtype=complex))


def _drive_generator(a, operator: str) -> np.ndarray:
    try:
        scale = _DRIVE_SCALE[operator]
    except KeyError:
        raise ValueError(f"operator must be 'spin' or 'pauli', got {operator!r}") from None
    n = len(a)
    f = sum(ai * hilbert.site_operator("x", j + 1, n) for j, ai in enumerate(a))
    return scale * np.asarray(f, dtype=complex)


def local_drive_feedback(a, operator: str = "spin") -> FeedbackScheme:
    """Independent x-drive on every atom with pulse areas ``a``.

    With ``operator="spin"`` the generator is ``sum_i a_i sigma_x^(i) / 2``;
    ``"pauli"`` drops the factor one half.
    """
    a = [float(x) for x in a]
    f = _drive_generator(a, operator)
    return FeedbackScheme(unitary_from_generator(f), "local_drive", f, {"a": a, "operator": operator})


def epsilon_pair_feedback(A: float, eps: float, operator: str = "spin") -> FeedbackScheme:
    """Four-atom drive ``(A, A(1-eps), -A, -A(1-eps))``."""
    a = [A, A * (1 - eps), -A, -A * (1 - eps)]
    f = _drive_generator(a, operator)
    params = {"A": float(A), "eps": float(eps), "operator": operator}
    return FeedbackScheme(unitary_from_generator(f), "epsilon_pair", f, params)


def _is_dark(psi: np.ndarray, tol: float = 1e-8) -> bool:
    n = hilbert.n_qubits(psi)
    jm, jp = hilbert.collective("-", n), hilbert.collective("+", n)
    return bool(np.linalg.norm(jm @ psi) < tol and np.linalg.norm(jp @ psi) < tol)


def _dark_split(target: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Normalized target and an orthonormal basis of its dark complement."""
    t = hilbert.normalize(target)
    d = np.array(dark_basis(n)).T
    resid = d - np.outer(t, t.conj() @ d)
    u, s, _ = np.linalg.svd(resid, full_matrices=False)
    return t, u[:, s > 1e-8]


def _working_frame(basis: CoupledBasis, target: np.ndarray):
    """Non-dark sectors in basis order, plus the target and unwanted dark vectors."""
    t, unwanted = _dark_split(target, basis.n)
    sectors = [s for s in basis.sectors if s.J != 0]
    return sectors, t, unwanted


def _givens(d: int, src: np.ndarray, dst: np.ndarray, angle: float = np.pi / 2) -> np.ndarray:
    """Generator ``K`` with ``exp(angle K) src = dst`` (two-state rotation)."""
    return angle * (np.outer(dst, src.conj()) - np.outer(src, dst.conj()))


def schematic_feedback(kind: str, basis: CoupledBasis, target: np.ndarray) -> FeedbackScheme:
    """Chain of two-state rotations linking every sector to ``target``.

    Non-dark sectors are visited in basis order (highest ``J`` first) and the
    last one is linked to the target.  ``one_way`` rotates the lowest state
    of each sector into the highest state of the next, so jumps can only move
    forward along the chain.  ``two_way`` links the lowest state of the next
    sector with the second-lowest state of the current one (the lowest for the
    first sector), giving jumps in both directions; only the final link into
    the target is necessarily one-way.  Unwanted dark states are left fixed.
    """
    if kind not in ("one_way", "two_way"):
        raise ValueError(f"kind must be 'one_way' or 'two_way', got {kind!r}")
    if not _is_dark(target):
        raise ValueError("target is not a dark state")
    sectors, t, _ = _working_frame(basis, target)
    d = 1 << basis.n
    ladders = [basis.sector_vectors(s) for s in sectors]  # columns J_z ascending
    links = []
    for i, cur in enumerate(ladders):
        nxt = ladders[i + 1] if i + 1 < len(ladders) else t[:, None]
        if kind == "one_way":
            links.append((cur[:, 0], nxt[:, -1]))
        else:
            out = cur[:, 0] if i == 0 else cur[:, 1]
            inc = nxt[:, 0]
            links.append((out, inc))
    k = sum(_givens(d, a, b) for a, b in links)
    f = -1j * k
    f = 0.5 * (f + f.conj().T)
    u = unitary_from_generator(f)
    return FeedbackScheme(u, f"schematic_{kind}", f, {"n_links": len(links)})


@dataclass
class StrategyReport:
    """Outcome of :func:`validate_strategy`.

    ``edge_list`` holds ``(source, destination, kind)`` triples between graph
    nodes; ``kind`` is ``"jump"`` or ``"hamiltonian"``.
    """

    protected: bool
    reachable: bool
    blocking_sectors: list[str]
    edge_list: list[tuple[str, str, str]]
    protection_residual: float
    nodes: list[str]

    def jump_graph(self) -> nx.DiGraph:
        g = nx.DiGraph()
        g.add_nodes_from(self.nodes)
        g.add_edges_from((a, b) for a, b, kind in self.edge_list if kind == "jump" and a != b)
        return g

    def is_one_way(self) -> bool:
        """True when jumps between distinct nodes never form a directed cycle."""
        return nx.is_directed_acyclic_graph(self.jump_graph())

    def to_dict(self) -> dict[str, Any]:
        return {
            "protected": self.protected,
            "reachable": self.reachable,
            "blocking_sectors": list(self.blocking_sectors),
            "protection_residual": self.protection_residual,
            "nodes": list(self.nodes),
            "edges": [{"from": a, "to": b, "kind": k} for a, b, k in self.edge_list],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


TARGET_NODE = "target"


def validate_strategy(
    u: np.ndarray,
    target: np.ndarray,
    basis: CoupledBasis | None = None,
    tol: float = 1e-10,
) -> StrategyReport:
    """Check protection of ``target`` and reachability of it under ``U J_-``.

    Protection: the unwanted dark subspace (the dark states orthogonal to the
    target) receives no amplitude from ``U`` acting on any state that
    ``J_-`` can produce, i.e. any coupled state with ``J_z != +J``.

    Reachability: nodes are the non-dark sectors, the target and each
    unwanted dark vector.  A jump edge ``S -> S'`` exists when the block of
    ``U J_-`` from ``S`` to ``S'`` exceeds ``tol`` relative to the largest
    block.  The drive mixes states inside each sector, so a sector is a
    single node.  Every node other than the unwanted ones must reach the
    target.
    """
    n = hilbert.n_qubits(u)
    if not hilbert.is_unitary(u):
        raise ValueError("U is not unitary")
    if not _is_dark(target):
        raise ValueError("target is not a dark state")
    basis = basis or build_coupled_basis(n)
    sectors, t, unwanted = _working_frame(basis, target)

    nontop = basis.transform[:, [k for k, lab in enumerate(basis.labels) if lab.Jz != lab.J]]
    residual = 0.0
    if unwanted.shape[1]:
        leak = unwanted.conj().T @ u @ nontop
        residual = float(np.max(np.linalg.norm(leak, axis=0)))

    frames: dict[str, np.ndarray] = {str(s): basis.sector_vectors(s) for s in sectors}
    frames[TARGET_NODE] = t[:, None]
    unwanted_nodes = [f"unwanted[{k}]" for k in range(unwanted.shape[1])]
    for k, name in enumerate(unwanted_nodes):
        frames[name] = unwanted[:, k : k + 1]

    jump = u @ hilbert.collective("-", n)
    names = list(frames)
    mags = {
        (src, dst): float(np.max(np.abs(frames[dst].conj().T @ jump @ frames[src])))
        for src in names
        for dst in names
    }
    scale = max(mags.values(), default=0.0)
    thr = tol * scale if scale > 0 else tol

    edges: list[tuple[str, str, str]] = []
    for (src, dst), m in mags.items():
        if m > thr:
            edges.append((src, dst, "jump"))
    for s in sectors:
        edges.append((str(s), str(s), "hamiltonian"))

    g = nx.DiGraph()
    g.add_nodes_from(names)
    g.add_edges_from((a, b) for a, b, _ in edges if a != b)
    can_reach = nx.ancestors(g, TARGET_NODE) | {TARGET_NODE}
    blocking = [x for x in names if x not in can_reach and x not in unwanted_nodes]
    return StrategyReport(
        protected=residual < tol,
        reachable=not blocking,
        blocking_sectors=blocking,
        edge_list=edges,
        protection_residual=residual,
        nodes=names,
    )
