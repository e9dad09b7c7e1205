"""Pure-numpy implementations of the hot kernels (reference backend)."""

import numpy as np


def nojump_chunk(prop, psi, r, out):
    """Apply ``prop`` repeatedly, writing each result into ``out``.

    Stops before the first step whose squared norm falls below ``r``.
    Returns the number of completed steps; ``out[:k]`` holds the states.
    """
    cur = psi
    for k in range(out.shape[0]):
        nxt = prop @ cur
        if np.vdot(nxt, nxt).real < r:
            return k
        out[k] = nxt
        cur = nxt
    return out.shape[0]


def subset_purities(psi, n):
    """``tr(rho_A^2)`` for every subset ``A`` of the ``n`` qubits.

    Subsets are bit masks over basis-index bits, so qubit ``q`` (1-based)
    corresponds to bit ``n - q``.  Entry 0 and entry ``2**n - 1`` hold
    ``<psi|psi>**2``.
    """
    full = (1 << n) - 1
    out = np.empty(1 << n)
    tensor = psi.reshape((2,) * n)
    for mask in range(1 << n):
        a = bin(mask).count("1")
        if 2 * a > n or (2 * a == n and mask > full ^ mask):
            continue
        axes_a = [q for q in range(n) if mask >> (n - 1 - q) & 1]
        axes_b = [q for q in range(n) if not mask >> (n - 1 - q) & 1]
        m = tensor.transpose(axes_a + axes_b).reshape(1 << a, 1 << (n - a))
        red = m @ m.conj().T
        val = float(np.vdot(red, red).real)
        out[mask] = val
        out[full ^ mask] = val
    return out
