"""Master-equation and quantum-trajectory dynamics with jump feedback.

The model is

    d rho/dt = -i Omega [J_+ + J_-, rho] + Gamma D[U J_-] rho
               + sum_j gamma_j D[sigma_j-] rho

and its unravelling into pure-state trajectories: between detections the
unnormalized state follows ``-i Omega (J_+ + J_-) - (Gamma/2) J_+ J_-
- sum_j (gamma_j/2) sigma_j+ sigma_j-``; a detection applies ``U J_-`` (or a
local ``sigma_j-``) and renormalizes.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping

import numpy as np
import scipy.linalg
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from . import hilbert
from ._backend import kernels
from .feedback import FeedbackScheme, identity_feedback

log = logging.getLogger(__name__)

RNG_ALGORITHM = "numpy.random.Philox (4x64-10 counter-based)"
SUPEROP_MAX_QUBITS = 5


class IntegrationError(RuntimeError):
    """Adaptive integration could not proceed (step-size underflow etc.)."""


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def rng_metadata(seed: int) -> dict:
    return {"algorithm": RNG_ALGORITHM, "numpy": np.__version__, "seed": int(seed)}


@dataclass(frozen=True)
class SimConfig:
    """Physical parameters; rates in units of ``Gamma``, times in ``1/Gamma``."""

    n: int
    omega: float = 1.0
    Gamma: float = 1.0
    gamma: tuple[float, ...] | float = 1e-3
    scheme: FeedbackScheme | None = None
    duration: float = 100.0
    tolerance: float = 1e-8
    seed: int = 42

    def __post_init__(self):
        g = self.gamma
        g = (float(g),) * self.n if np.isscalar(g) else tuple(float(x) for x in g)
        object.__setattr__(self, "gamma", g)
        if len(g) != self.n:
            raise ValueError(f"need {self.n} spontaneous-emission rates, got {len(g)}")
        if min((self.omega, self.Gamma, *g)) < 0:
            raise ValueError("rates must be non-negative")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.scheme is not None and self.scheme.n != self.n:
            raise ValueError("feedback scheme acts on a different number of qubits")

    @property
    def dim(self) -> int:
        return 1 << self.n

    @cached_property
    def feedback(self) -> FeedbackScheme:
        return self.scheme if self.scheme is not None else identity_feedback(self.n)

    @cached_property
    def hamiltonian(self) -> np.ndarray:
        return self.omega * (hilbert.collective("+", self.n) + hilbert.collective("-", self.n))

    @cached_property
    def channels(self) -> list[tuple[str, float, np.ndarray]]:
        """``(name, rate, operator)`` for every jump channel with nonzero rate."""
        out = [("collective", self.Gamma, self.feedback.unitary @ hilbert.collective("-", self.n))]
        for j, g in enumerate(self.gamma, start=1):
            out.append((f"spont_{j}", g, hilbert.site_operator("-", j, self.n)))
        return [c for c in out if c[1] > 0]

    @cached_property
    def nojump_generator(self) -> np.ndarray:
        g = -1j * self.hamiltonian
        for _, rate, c in self.channels:
            g = g - 0.5 * rate * (c.conj().T @ c)
        return g

    @cached_property
    def superoperator(self) -> np.ndarray:
        """Liouvillian acting on row-major ``rho.ravel()``."""
        if self.n > SUPEROP_MAX_QUBITS:
            raise ValueError(f"superoperator limited to n <= {SUPEROP_MAX_QUBITS}")
        d = self.dim
        eye = np.eye(d)
        h = self.hamiltonian
        sup = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
        for _, rate, c in self.channels:
            cdc = c.conj().T @ c
            sup += rate * (np.kron(c, c.conj()) - 0.5 * np.kron(cdc, eye) - 0.5 * np.kron(eye, cdc.T))
        return sup

    def propagator(self, dt: float) -> np.ndarray:
        return np.ascontiguousarray(scipy.linalg.expm(self.nojump_generator * dt))

    def describe(self) -> dict:
        return {
            "n": self.n,
            "omega": self.omega,
            "Gamma": self.Gamma,
            "gamma": list(self.gamma),
            "feedback": self.feedback.describe(),
            "duration": self.duration,
            "tolerance": self.tolerance,
            "seed": self.seed,
        }


def liouvillian_apply(rho: np.ndarray, cfg: SimConfig) -> np.ndarray:
    if rho.shape != (cfg.dim, cfg.dim):
        raise ValueError(f"density matrix shape {rho.shape} does not match n={cfg.n}")
    h = cfg.hamiltonian
    out = -1j * (h @ rho - rho @ h)
    for _, rate, c in cfg.channels:
        out += rate * hilbert.dissipator(c, rho)
    return out


def _clean(rho: np.ndarray) -> np.ndarray:
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if abs(tr - 1) > 1e-12:
        rho = rho / tr
    return rho


@dataclass
class MasterSolution:
    times: np.ndarray
    states: np.ndarray  # (n_times, d, d)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def overlaps(self, target: np.ndarray) -> np.ndarray:
        return np.einsum("i,tij,j->t", target.conj(), self.states, target).real


def evolve_master(
    rho0: np.ndarray,
    T: float,
    cfg: SimConfig,
    n_samples: int = 101,
    sample_times: np.ndarray | None = None,
    method: str = "rk",
) -> MasterSolution:
    """Integrate the master equation from ``rho0`` to time ``T``.

    ``method="rk"`` uses adaptive Dormand-Prince (DOP853) at relative
    tolerance ``cfg.tolerance``; ``"expm"`` applies the exact superoperator
    exponential between samples (``n <= 5`` only).  Trace is renormalized at
    sample points when its drift exceeds 1e-12.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (cfg.dim, cfg.dim):
        raise ValueError(f"density matrix shape {rho0.shape} does not match n={cfg.n}")
    times = np.linspace(0.0, T, n_samples) if sample_times is None else np.asarray(sample_times, float)
    if times[0] != 0 or np.any(np.diff(times) <= 0):
        raise ValueError("sample times must start at 0 and increase")
    d = cfg.dim
    states = np.empty((len(times), d, d), dtype=complex)
    states[0] = rho = rho0
    use_superop = cfg.n <= SUPEROP_MAX_QUBITS
    if method == "expm":
        sup = cfg.superoperator
        cache: dict[float, np.ndarray] = {}
        for i in range(1, len(times)):
            dt = round(times[i] - times[i - 1], 14)
            if dt not in cache:
                cache[dt] = scipy.linalg.expm(sup * dt)
            rho = _clean((cache[dt] @ rho.ravel()).reshape(d, d))
            states[i] = rho
        return MasterSolution(times, states)
    if method != "rk":
        raise ValueError(f"unknown method {method!r}")

    if use_superop:
        sup = cfg.superoperator

        def rhs(_t, y):
            return sup @ y
    else:

        def rhs(_t, y):
            return liouvillian_apply(y.reshape(d, d), cfg).ravel()

    rtol = cfg.tolerance
    atol = rtol * 1e-2
    first_step = None
    for i in range(1, len(times)):
        sol = solve_ivp(
            rhs, (times[i - 1], times[i]), rho.ravel(), method="DOP853",
            rtol=rtol, atol=atol, first_step=first_step,
        )
        if sol.status != 0:
            raise IntegrationError(f"master-equation integration failed at t={times[i - 1]}: {sol.message}")
        if len(sol.t) > 1:
            first_step = min(sol.t[-1] - sol.t[-2], times[-1] - times[i]) or None
        rho = _clean(sol.y[:, -1].reshape(d, d))
        states[i] = rho
    return MasterSolution(times, states)


@dataclass
class SteadyState:
    rho: np.ndarray
    converged: bool
    residual: float
    time: float


def steady_state(
    cfg: SimConfig,
    rho0: np.ndarray,
    t_max: float = 1e6,
    tol: float = 1e-10,
    t_first: float = 1.0,
) -> SteadyState:
    """Long-time limit of the master equation started from ``rho0``.

    Evolves with propagators of doubling duration until
    ``max |d rho/dt| < tol * Gamma`` or ``t_max`` is passed.  A result that
    has not converged is returned with ``converged=False`` and logged.
    """
    rho = np.asarray(rho0, dtype=complex)
    d = cfg.dim
    scale = tol * (cfg.Gamma if cfg.Gamma > 0 else 1.0)
    t = 0.0
    if cfg.n <= SUPEROP_MAX_QUBITS:
        sup = cfg.superoperator
        step = scipy.linalg.expm(sup * t_first)
        dt = t_first
        while True:
            resid = float(np.max(np.abs(sup @ rho.ravel())))
            if resid < scale or t >= t_max:
                break
            rho = _clean((step @ rho.ravel()).reshape(d, d))
            t += dt
            step = step @ step
            dt *= 2
    else:
        dt = t_first
        while True:
            resid = float(np.max(np.abs(liouvillian_apply(rho, cfg))))
            if resid < scale or t >= t_max:
                break
            rho = evolve_master(rho, dt, cfg, n_samples=2).final
            t += dt
            dt *= 2
    converged = resid < scale
    if not converged:
        log.warning("steady state not converged by t=%g (residual %.3g)", t, resid)
    return SteadyState(rho, converged, resid, t)


def steady_state_nullspace(cfg: SimConfig) -> np.ndarray:
    """Steady state from the null vector of the Liouvillian superoperator.

    Only meaningful when the steady state is unique (e.g. all
    ``gamma_j > 0``).
    """
    _, _, vh = np.linalg.svd(cfg.superoperator)
    rho = vh[-1].conj().reshape(cfg.dim, cfg.dim)
    rho = rho / np.trace(rho)
    return _clean(rho)


# --------------------------------------------------------------------------
# quantum trajectories


class _Observer:
    """Receives trajectory output; returning True from a hook stops the run."""

    def samples(self, times: np.ndarray, states: np.ndarray) -> bool:
        return False

    def jump(self, t: float, channel: str, state: np.ndarray) -> bool:
        return False


def _locate_jump(gen: np.ndarray, psi: np.ndarray, r: float, h: float) -> tuple[float, np.ndarray]:
    """Time ``s`` in ``(0, h]`` where ``|exp(gen s) psi|^2`` falls to ``r``."""

    def excess(s):
        phi = scipy.linalg.expm(gen * s) @ psi
        return np.vdot(phi, phi).real - r

    if excess(h) >= 0:  # rounding at the bracket end
        s = h
    else:
        s = brentq(excess, 0.0, h, xtol=1e-14, rtol=1e-10) if excess(0.0) > 0 else 0.0
    return s, scipy.linalg.expm(gen * s) @ psi


def _simulate(psi0, T, rng, cfg: SimConfig, dt, observer: _Observer, chunk: int = 2048, backend=None):
    """Waiting-time Monte Carlo on a fixed sampling grid ``k * dt``.

    Returns the list of ``(time, channel)`` jumps.  Grid steps use the exact
    no-jump propagator through the kernel backend; a step that crosses the
    jump threshold is resolved by root finding on the squared norm.
    """
    kern = backend or kernels
    n_steps = max(1, int(round(T / dt)))
    dt = T / n_steps
    gen = cfg.nojump_generator
    prop = cfg.propagator(dt)
    channels = cfg.channels
    jumps: list[tuple[float, str]] = []

    psi = np.ascontiguousarray(hilbert.normalize(np.asarray(psi0, dtype=complex)))
    if observer.samples(np.array([0.0]), psi[None, :]):
        return jumps
    r = rng.random()
    k = 0
    t = 0.0
    on_grid = True
    buf = np.empty((min(chunk, n_steps), cfg.dim), dtype=complex)
    while k < n_steps:
        if on_grid:
            want = min(buf.shape[0], n_steps - k)
            m = kern.nojump_chunk(prop, psi, r, buf[:want])
            if m:
                states = buf[:m]
                norms = np.sqrt(np.einsum("ij,ij->i", states.real, states.real)
                                + np.einsum("ij,ij->i", states.imag, states.imag))
                times = (k + 1 + np.arange(m)) * dt
                psi = states[m - 1].copy()
                k += m
                t = k * dt
                if observer.samples(times, states / norms[:, None]):
                    return jumps
            if m == want:
                continue
            h = dt
        else:
            h = (k + 1) * dt - t
            phi = scipy.linalg.expm(gen * h) @ psi
            if np.vdot(phi, phi).real >= r:
                psi = np.ascontiguousarray(phi)
                k += 1
                t = k * dt
                on_grid = True
                if observer.samples(np.array([t]), (phi / np.linalg.norm(phi))[None, :]):
                    return jumps
                continue

        s, pre = _locate_jump(gen, psi, r, h)
        t = t + s
        weights = np.array([rate * np.vdot(c @ pre, c @ pre).real for _, rate, c in channels])
        total = weights.sum()
        if total <= 0:
            raise IntegrationError(f"norm decayed with zero jump rate at t={t}")
        idx = int(np.searchsorted(np.cumsum(weights), rng.random() * total, side="right"))
        idx = min(idx, len(channels) - 1)
        name, _, op = channels[idx]
        psi = np.ascontiguousarray(hilbert.normalize(op @ pre))
        jumps.append((t, name))
        r = rng.random()
        on_grid = False
        if observer.jump(t, name, psi):
            return jumps
        if math.isclose(t, (k + 1) * dt, rel_tol=0, abs_tol=1e-13 * max(1.0, t)):
            # jump landed on a grid point
            k += 1
            t = k * dt
            on_grid = True
            if observer.samples(np.array([t]), psi[None, :]):
                return jumps
    return jumps


@dataclass
class TrajectoryRecord:
    sample_times: np.ndarray
    states: np.ndarray | None  # (n_samples, d), normalized
    jumps: list[tuple[float, str]]
    seed: int
    observables: dict[str, np.ndarray] = field(default_factory=dict)

    def overlaps(self, target: np.ndarray) -> np.ndarray:
        if self.states is None:
            raise ValueError("states were not stored")
        return np.abs(self.states @ target.conj()) ** 2

    def jump_count(self, channel: str | None = None) -> int:
        return sum(1 for _, c in self.jumps if channel is None or c == channel)


def _observable_values(obs: Mapping[str, np.ndarray], states: np.ndarray) -> dict[str, np.ndarray]:
    """Overlap ``|<v|psi>|^2`` for vector entries, ``<psi|A|psi>`` for matrices."""
    out = {}
    for name, a in obs.items():
        if a.ndim == 1:
            out[name] = np.abs(states @ a.conj()) ** 2
        else:
            out[name] = np.einsum("ti,ij,tj->t", states.conj(), a, states).real
    return out


class _Recorder(_Observer):
    def __init__(self, store_states: bool, observables):
        self.store = store_states
        self.obs = observables or {}
        self.times: list[np.ndarray] = []
        self.states: list[np.ndarray] = []
        self.values: dict[str, list[np.ndarray]] = {k: [] for k in self.obs}

    def samples(self, times, states):
        self.times.append(times.copy())
        if self.store:
            self.states.append(states.copy())
        for k, v in _observable_values(self.obs, states).items():
            self.values[k].append(v)
        return False


def run_trajectory(
    psi0: np.ndarray,
    T: float,
    seed: int,
    cfg: SimConfig,
    dt: float = 0.01,
    store_states: bool = True,
    observables: Mapping[str, np.ndarray] | None = None,
    backend=None,
) -> TrajectoryRecord:
    """One quantum trajectory sampled every ``dt`` up to ``T``.

    ``observables`` maps names to either target vectors (recorded as
    overlaps) or Hermitian operators (recorded as expectations).
    """
    rec = _Recorder(store_states, observables)
    jumps = _simulate(psi0, T, make_rng(seed), cfg, dt, rec, backend=backend)
    return TrajectoryRecord(
        sample_times=np.concatenate(rec.times),
        states=np.concatenate(rec.states) if store_states else None,
        jumps=jumps,
        seed=int(seed),
        observables={k: np.concatenate(v) for k, v in rec.values.items()},
    )


class _FirstPassage(_Observer):
    def __init__(self, target, threshold):
        self.target = target.conj()
        self.threshold = threshold
        self.time = math.nan
        self.n_jumps = 0

    def samples(self, times, states):
        ov = np.abs(states @ self.target) ** 2
        hit = np.flatnonzero(ov > self.threshold)
        if hit.size:
            self.time = float(times[hit[0]])
            return True
        return False

    def jump(self, t, channel, state):
        self.n_jumps += 1
        if abs(np.vdot(state, self.target.conj())) ** 2 > self.threshold:
            self.time = t
            return True
        return False


def first_passage(
    psi0: np.ndarray,
    target: np.ndarray,
    threshold: float,
    t_max: float,
    seed: int,
    cfg: SimConfig,
    dt: float = 0.01,
) -> tuple[float, int]:
    """First time the target overlap exceeds ``threshold`` and jumps taken.

    Returns ``(nan, jumps)`` if the threshold is not reached by ``t_max``.
    """
    obs = _FirstPassage(target, threshold)
    _simulate(psi0, t_max, make_rng(seed), cfg, dt, obs)
    return obs.time, obs.n_jumps


@dataclass
class EnsembleEstimate:
    sample_times: np.ndarray
    rho_hat: np.ndarray  # (n_samples, d, d)
    n_trajectories: int
    means: dict[str, np.ndarray]
    stderr: dict[str, np.ndarray]
    metadata: dict


class _Accumulator(_Observer):
    def __init__(self, n_samples, dim, observables):
        self.rho = np.zeros((n_samples, dim, dim), dtype=complex)
        self.obs = observables or {}
        self.s1 = {k: np.zeros(n_samples) for k in self.obs}
        self.s2 = {k: np.zeros(n_samples) for k in self.obs}
        self.pos = 0

    def samples(self, times, states):
        sl = slice(self.pos, self.pos + len(times))
        self.rho[sl] += np.einsum("ti,tj->tij", states, states.conj())
        for k, v in _observable_values(self.obs, states).items():
            self.s1[k][sl] += v
            self.s2[k][sl] += v * v
        self.pos += len(times)
        return False


def _run_block(psi0, T, seeds, cfg, dt, observables):
    n_samples = max(1, int(round(T / dt))) + 1
    acc = _Accumulator(n_samples, cfg.dim, observables)
    for s in seeds:
        acc.pos = 0
        _simulate(psi0, T, make_rng(s), cfg, dt, acc)
    return acc


def ensemble_average(
    psi0: np.ndarray,
    T: float,
    n_traj: int,
    base_seed: int,
    cfg: SimConfig,
    dt: float = 0.05,
    observables: Mapping[str, np.ndarray] | None = None,
    threads: int = 1,
    block: int = 16,
) -> EnsembleEstimate:
    """Average of trajectory projectors; trajectory ``k`` uses seed ``base_seed + k``.

    Trajectories are grouped in fixed blocks of ``block`` seeds and the block
    sums are added in seed order, so the estimate does not depend on
    ``threads``.
    """
    if n_traj < 1:
        raise ValueError("need at least one trajectory")
    seeds = [base_seed + k for k in range(n_traj)]
    blocks = [seeds[i : i + block] for i in range(0, n_traj, block)]
    run: Callable = lambda b: _run_block(psi0, T, b, cfg, dt, observables)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    rho = parts[0].rho.copy()
    for p in parts[1:]:
        rho += p.rho
    rho /= n_traj
    means, stderr = {}, {}
    for k in observables or {}:
        s1 = sum(p.s1[k] for p in parts)
        s2 = sum(p.s2[k] for p in parts)
        mean = s1 / n_traj
        var = np.maximum(s2 / n_traj - mean**2, 0.0)
        means[k] = mean
        stderr[k] = np.sqrt(var / max(n_traj - 1, 1))
    n_samples = rho.shape[0]
    times = np.linspace(0.0, T, n_samples)
    meta = rng_metadata(base_seed) | {"per_trajectory_seed": "base_seed + index"}
    return EnsembleEstimate(times, rho, n_traj, means, stderr, meta)
