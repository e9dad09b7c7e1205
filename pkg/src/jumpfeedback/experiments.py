"""Named experiments behind the command-line front end.

Each ``run_*`` function takes a resolved :class:`ExperimentSpec` and returns
an :class:`ExperimentResult`: a table (header + rows) plus metadata.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import dynamics, feedback, hilbert, measures, spin_structure
from .config import ExperimentSpec

log = logging.getLogger(__name__)


@dataclass
class ExperimentResult:
    header: list[str]
    rows: list[list]
    metadata: dict = field(default_factory=dict)
    converged: bool = True
    document: dict | None = None  # JSON payload for commands without a table


def target_state(n: int) -> np.ndarray:
    """The stabilisation target: the singlet orthogonal to the Bell-pair product for
    ``n = 4``, otherwise the first canonical singlet."""
    if n == 4:
        return spin_structure.target_singlet()
    return spin_structure.dark_basis(n)[0]


def initial_state(spec: ExperimentSpec) -> np.ndarray:
    """Initial state as a vector, or a density matrix for ``initial = mixed``."""
    n = spec.N
    if spec.initial == "ground":
        return hilbert.basis_state("g" * n)
    if spec.initial == "excited":
        return hilbert.basis_state("e" * n)
    if spec.initial == "target":
        return target_state(n)
    if spec.initial == "bell_bell":
        return spin_structure.bell_bell_state()
    return hilbert.maximally_mixed(n)


def build_scheme(spec: ExperimentSpec, A: float | None = None, eps: float | None = None) -> feedback.FeedbackScheme:
    n = spec.N
    kind = spec.feedback
    if kind == "identity":
        return feedback.identity_feedback(n)
    if kind == "local_drive":
        return feedback.local_drive_feedback(spec.a, spec.drive_operator)
    if kind == "epsilon_pair":
        return feedback.epsilon_pair_feedback(
            spec.A if A is None else A, spec.eps if eps is None else eps, spec.drive_operator
        )
    basis = spin_structure.build_coupled_basis(n)
    return feedback.schematic_feedback(kind.removeprefix("schematic_"), basis, target_state(n))


def sim_config(spec: ExperimentSpec, scheme=None, gamma=None) -> dynamics.SimConfig:
    return dynamics.SimConfig(
        n=spec.N,
        omega=spec.Omega,
        Gamma=spec.Gamma,
        gamma=spec.gamma if gamma is None else gamma,
        scheme=scheme if scheme is not None else build_scheme(spec),
        duration=spec.T,
        tolerance=spec.tolerance,
        seed=spec.seed,
    )


def _as_density(state: np.ndarray) -> np.ndarray:
    return hilbert.projector(state) if state.ndim == 1 else state


def _map(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def run_dark_basis(spec: ExperimentSpec) -> ExperimentResult:
    n = spec.N
    vecs = spin_structure.dark_basis(n)
    basis = spin_structure.build_coupled_basis(n)
    labels = [str(lab) for lab in basis.labels if lab.J == 0]
    rows = []
    for k, v in enumerate(vecs):
        for i in np.flatnonzero(np.abs(v) > 1e-14):
            rows.append([k, int(i), hilbert.bitstring(int(i), n), v[i].real, v[i].imag])
    meta = {
        "dark_dimension": len(vecs),
        "expected_dimension": spin_structure.singlet_dimension(n),
        "labels": labels,
    }
    return ExperimentResult(["vector", "index", "basis", "re", "im"], rows, meta)


def run_validate(spec: ExperimentSpec) -> ExperimentResult:
    scheme = build_scheme(spec)
    basis = spin_structure.build_coupled_basis(spec.N)
    report = feedback.validate_strategy(scheme.unitary, target_state(spec.N), basis)
    doc = report.to_dict() | {"feedback": scheme.describe()}
    return ExperimentResult([], [], {}, True, doc)


def run_evolve(spec: ExperimentSpec) -> ExperimentResult:
    cfg = sim_config(spec)
    rho0 = _as_density(initial_state(spec))
    method = "expm" if spec.N <= dynamics.SUPEROP_MAX_QUBITS else "rk"
    sol = dynamics.evolve_master(rho0, spec.T, cfg, n_samples=spec.n_samples, method=method)
    target = target_state(spec.N) if spec.N % 2 == 0 else None
    dark = spin_structure.dark_projector(spec.N) if spec.N % 2 == 0 else None
    rows = []
    for t, rho in zip(sol.times, sol.states):
        ov = measures.overlap(rho, target) if target is not None else float("nan")
        dp = float(np.trace(dark @ rho).real) if dark is not None else float("nan")
        rows.append([t, ov, hilbert.purity(rho), float(np.trace(rho).real), dp])
    meta = {"method": method, "config": cfg.describe()}
    return ExperimentResult(["t", "overlap", "purity", "trace", "dark_population"], rows, meta)


def run_trajectory(spec: ExperimentSpec) -> ExperimentResult:
    cfg = sim_config(spec)
    psi0 = initial_state(spec)
    rec = dynamics.run_trajectory(psi0, spec.T, spec.seed, cfg, dt=spec.dt)
    target = target_state(spec.N) if spec.N % 2 == 0 else None
    header = ["t", "overlap", "jumps_so_far"]
    if spec.amplitudes:
        for i in range(cfg.dim):
            header += [f"re_{i}", f"im_{i}"]
    jump_times = np.array([t for t, _ in rec.jumps])
    rows = []
    for t, psi in zip(rec.sample_times, rec.states):
        ov = measures.overlap(psi, target) if target is not None else float("nan")
        row = [t, ov, int(np.searchsorted(jump_times, t, side="right"))]
        if spec.amplitudes:
            for z in psi:
                row += [z.real, z.imag]
        rows.append(row)
    meta = {
        "jumps": [{"t": t, "channel": c} for t, c in rec.jumps],
        "rng": dynamics.rng_metadata(spec.seed),
        "config": cfg.describe(),
    }
    return ExperimentResult(header, rows, meta)


def run_ensemble(spec: ExperimentSpec) -> ExperimentResult:
    cfg = sim_config(spec)
    psi0 = initial_state(spec)
    obs = {"overlap": target_state(spec.N)} if spec.N % 2 == 0 else {}
    est = dynamics.ensemble_average(psi0, spec.T, spec.n_traj, spec.seed, cfg, dt=spec.dt,
                                    observables=obs, threads=spec.threads)
    rows = []
    for i, t in enumerate(est.sample_times):
        ov = est.means["overlap"][i] if obs else float("nan")
        se = est.stderr["overlap"][i] if obs else float("nan")
        rows.append([t, ov, se, hilbert.purity(est.rho_hat[i])])
    meta = {"rng": est.metadata, "n_trajectories": est.n_trajectories, "config": cfg.describe()}
    return ExperimentResult(["t", "overlap", "overlap_stderr", "purity"], rows, meta)


def steady_overlap(spec: ExperimentSpec, A: float, eps: float, gamma) -> tuple[float, bool]:
    """Steady-state target overlap for the detuned pair drive, from all-ground."""
    scheme = feedback.epsilon_pair_feedback(A, eps, spec.drive_operator)
    cfg = sim_config(spec, scheme=scheme, gamma=gamma)
    rho0 = hilbert.projector(hilbert.basis_state("g" * spec.N))
    ss = dynamics.steady_state(cfg, rho0, t_max=spec.t_max)
    return measures.overlap(ss.rho, target_state(spec.N)), ss.converged


def run_scan_A(spec: ExperimentSpec) -> ExperimentResult:
    """Steady-state overlap versus pulse area ``A`` at ``eps = 0``, with and
    without spontaneous emission."""
    grid = spec.grid("A_grid")

    def point(A):
        o0, c0 = steady_overlap(spec, A, 0.0, 0.0)
        o1, c1 = steady_overlap(spec, A, 0.0, spec.gamma)
        return [A, o0, o1, c0, c1]

    rows = _map(point, grid, spec.threads)
    ok = all(r[3] and r[4] for r in rows)
    header = ["A", "overlap_no_se", "overlap_with_se", "converged_no_se", "converged_with_se"]
    return ExperimentResult(header, rows, {"n_points": len(rows)}, ok)


def run_scan_A_eps(spec: ExperimentSpec) -> ExperimentResult:
    grid = list(product(spec.grid("A_grid"), spec.grid("eps_grid")))

    def point(p):
        A, eps = p
        ov, ok = steady_overlap(spec, A, eps, spec.gamma)
        return [A, eps, ov, ok]

    rows = _map(point, grid, spec.threads)
    ok = all(r[3] for r in rows)
    return ExperimentResult(["A", "eps", "overlap", "converged"], rows, {"n_points": len(rows)}, ok)


def run_concurrence_range(spec: ExperimentSpec) -> ExperimentResult:
    rng = measures.dark_concurrence_range(spec.N, spec.restarts, spec.seed, threads=spec.threads)
    rows = [[spec.N, rng.minimum, rng.maximum, rng.n_restarts, rng.seed]]
    meta = {
        "cap": measures.concurrence_cap(spec.N),
        "reference": {k: measures.cn_concurrence(measures.reference_state(k, spec.N))
                      for k in ("ghz", "w", "linear_cluster")},
    }
    return ExperimentResult(["N", "min", "max", "n_restarts", "seed"], rows, meta)


RUNNERS = {
    "dark-basis": run_dark_basis,
    "validate": run_validate,
    "evolve": run_evolve,
    "trajectory": run_trajectory,
    "ensemble": run_ensemble,
    "scan-A": run_scan_A,
    "scan-A-eps": run_scan_A_eps,
    "concurrence-range": run_concurrence_range,
}


def compare_schemes(
    n_seeds: int = 200,
    omega: float = 1.0,
    gamma: float = 1e-3,
    threshold: float = 0.9,
    t_max: float = 5000.0,
    base_seed: int = 0,
    dt: float = 0.01,
) -> dict:
    """Median time and jump count for trajectories from all-ground to first exceed
    ``threshold`` target overlap, under the one-way and two-way schematic
    feedbacks (four atoms)."""
    basis = spin_structure.build_coupled_basis(4)
    target = target_state(4)
    psi0 = hilbert.basis_state("gggg")
    out = {}
    for kind in ("one_way", "two_way"):
        cfg = dynamics.SimConfig(4, omega=omega, gamma=gamma,
                                 scheme=feedback.schematic_feedback(kind, basis, target))
        res = [dynamics.first_passage(psi0, target, threshold, t_max, base_seed + s, cfg, dt)
               for s in range(n_seeds)]
        times = np.array([r[0] for r in res])
        jumps = np.array([r[1] for r in res])
        out[kind] = {
            "median_time": float(np.nanmedian(times)),
            "median_jumps": float(np.median(jumps)),
            "mean_jumps": float(np.mean(jumps)),
            "unfinished": int(np.isnan(times).sum()),
        }
    out["time_ratio"] = out["two_way"]["median_time"] / out["one_way"]["median_time"]
    out["jump_ratio"] = out["two_way"]["median_jumps"] / out["one_way"]["median_jumps"]
    return out
