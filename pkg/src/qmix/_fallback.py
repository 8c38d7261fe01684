"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``.

Both modules expose the same two functions with the same argument layout, so
``qmix.kernels`` can pick either at import time.
"""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=4096)
def _pair_rows(dim, tbit, tbit2, cmask):
    rows = np.arange(dim)
    sel = (rows & cmask) == cmask
    if tbit2:
        sel &= ((rows & tbit) != 0) & ((rows & tbit2) == 0)
        lo = rows[sel]
        return lo, lo ^ tbit ^ tbit2
    sel &= (rows & tbit) == 0
    lo = rows[sel]
    return lo, lo | tbit


def run_program(state, mats, tbits, tbits2, cmasks, kinds):
    """Apply a compiled gate program in place to the rows of ``state``."""
    dim = state.shape[0]
    for g in range(len(kinds)):
        if kinds[g] == 0:
            lo, hi = _pair_rows(dim, int(tbits[g]), 0, int(cmasks[g]))
            a = state[lo]
            b = state[hi]
            u = mats[g]
            state[lo] = u[0, 0] * a + u[0, 1] * b
            state[hi] = u[1, 0] * a + u[1, 1] * b
        else:
            lo, hi = _pair_rows(dim, int(tbits[g]), int(tbits2[g]), int(cmasks[g]))
            state[lo], state[hi] = state[hi], state[lo].copy()


def subset_purity_sum(rho):
    """Sum of Tr(rho_A^2) over every subset A of the qubits (empty set gives 1)."""
    dim = rho.shape[0]
    n = dim.bit_length() - 1
    tensor = rho.reshape((2,) * (2 * n))
    total = 0.0
    for mask in range(dim):
        keep = [q for q in range(n) if mask >> (n - 1 - q) & 1]
        drop = [q for q in range(n) if q not in keep]
        k = len(keep)
        perm = keep + drop + [n + q for q in keep] + [n + q for q in drop]
        blk = tensor.transpose(perm).reshape(2**k, 2 ** (n - k), 2**k, 2 ** (n - k))
        red = np.trace(blk, axis1=1, axis2=3)
        total += float(np.sum(red * red.T).real)
    return total
