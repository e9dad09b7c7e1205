"""Compare the compiled and pure-numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from jumpfeedback import _backend, dynamics, feedback, hilbert, spin_structure


def _state(n, seed=0):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return psi / np.linalg.norm(psi)


def cases():
    for n in (4, 6, 8):
        psi = _state(n)
        yield f"subset_purities N={n}", lambda k, psi=psi, n=n: k.subset_purities(psi, n)

    cfg = dynamics.SimConfig(4, gamma=1e-3, scheme=feedback.epsilon_pair_feedback(np.pi / 2, 0.1))
    prop = cfg.propagator(0.01)
    psi = np.ascontiguousarray(hilbert.basis_state("gggg"))
    buf = np.empty((2048, 16), dtype=complex)
    yield "nojump_chunk 2048 steps N=4", lambda k: k.nojump_chunk(prop, psi, 0.0, buf)

    basis = spin_structure.build_coupled_basis(4)
    one_way = dynamics.SimConfig(4, gamma=1e-3, scheme=feedback.schematic_feedback(
        "one_way", basis, spin_structure.target_singlet()))
    yield "trajectory T=200 dt=0.01 N=4", lambda k: dynamics.run_trajectory(
        psi, 200, 1, one_way, dt=0.01, store_states=False, backend=k)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    names = _backend.available()
    kernels = {name: _backend.get_backend(name) for name in names}
    print(f"{'case':34s}" + "".join(f"{n:>14s}" for n in names) + ("      speedup" if len(names) > 1 else ""))
    for label, fn in cases():
        best = {}
        for name, k in kernels.items():
            fn(k)  # warm caches
            t = timeit.Timer(lambda: fn(k))
            loops, _ = t.autorange()
            best[name] = min(t.repeat(args.repeat, loops)) / loops
        row = f"{label:34s}" + "".join(f"{best[n] * 1e6:12.1f}us" for n in names)
        if len(names) > 1:
            row += f"{best['python'] / best['cython']:12.1f}x"
        print(row)


if __name__ == "__main__":
    main()
