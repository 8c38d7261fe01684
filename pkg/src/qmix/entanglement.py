"""Concentratable Entanglement (CE) and its mixed-state lower bound (CEL).

For an n-qubit state the power-set sum ``sum_A Tr(rho_A^2)`` runs over every
subset A of the qubits, with the empty set contributing 1 and the full set
contributing ``Tr(rho^2)``. Subsets are enumerated by increasing bitmask.

    CE(psi)  = 1 - sum / 2^n
    CEL(rho) = 1/2^n + (1 - 1/2^n) Tr(rho^2) - sum / 2^n

CEL coincides with CE on pure states and is never positive on fully separable
states, so ``CEL > 0`` certifies entanglement.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DimensionError, DomainError
from .qcore import MAX_DENSITY_QUBITS, PureState, as_density, purity


@dataclass(frozen=True)
class CelReport:
    value: float
    n_qubits: int
    purity: float
    subset_purity_sum: float

    def reconstruct(self):
        d = 2**self.n_qubits
        return 1 / d + (1 - 1 / d) * self.purity - self.subset_purity_sum / d


def subset_purity_sum(rho):
    rho = as_density(rho)
    if rho.n_qubits > MAX_DENSITY_QUBITS:
        raise DimensionError(f"{rho.n_qubits} qubits exceeds {MAX_DENSITY_QUBITS}")
    return float(kernels.subset_purity_sum(np.ascontiguousarray(rho.entries)))


def _pure_marginal_purity(tensor, n, keep):
    k = len(keep)
    drop = [q for q in range(n) if q not in keep]
    m = tensor.transpose(list(keep) + drop).reshape(2**k, 2 ** (n - k))
    # the smaller Gram matrix has the same nonzero spectrum
    g = m @ m.conj().T if k <= n - k else m.conj().T @ m
    return float(np.sum(np.abs(g) ** 2))


def pure_subset_purity_sum(psi):
    """Power-set purity sum computed from the amplitudes, without forming rho."""
    n = psi.n_qubits
    tensor = psi.amplitudes.reshape((2,) * n)
    total = 0.0
    for mask in range(2**n):
        keep = [q for q in range(n) if mask >> (n - 1 - q) & 1]
        if not keep:
            total += 1.0
        elif len(keep) == n:
            total += 1.0
        else:
            total += _pure_marginal_purity(tensor, n, keep)
    return total


def ce_pure(psi):
    """Concentratable Entanglement of a pure state over all of its qubits."""
    if not isinstance(psi, PureState):
        psi = PureState(psi)
    n = psi.n_qubits
    if n > MAX_DENSITY_QUBITS:
        raise DimensionError(f"power-set enumeration limited to {MAX_DENSITY_QUBITS} qubits, got {n}")
    return 1.0 - pure_subset_purity_sum(psi) / 2**n


def cel_mixed(rho):
    rho = as_density(rho)
    n = rho.n_qubits
    pur = purity(rho)
    total = subset_purity_sum(rho)
    d = 2**n
    value = 1 / d + (1 - 1 / d) * pur - total / d
    return CelReport(value=value, n_qubits=n, purity=pur, subset_purity_sum=total)


def cel(rho):
    return cel_mixed(rho).value


def _check_np(n, p):
    if int(n) != n or n < 2:
        raise DomainError(f"n must be an integer >= 2, got {n!r}")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p!r}")


def cel_ghz_noisy(n, p):
    """Closed-form CEL of ``p|GHZ_n><GHZ_n| + (1-p) I/2^n``."""
    _check_np(n, p)
    return p**2 / 2 - 1 / 2**n + (1 - p**2) * (3 / 2**n - 1 / 4**n - 0.75**n)


def cel_w_noisy(n, p):
    """Closed-form CEL of ``p|W_n><W_n| + (1-p) I/2^n``."""
    _check_np(n, p)
    return (n - 1) * p**2 / (2 * n) + (1 - p**2) * (2 / 2**n - 1 / 4**n - 0.75**n)


def ghz_sep_threshold(n):
    """Largest noise weight p for which noisy GHZ_n is fully separable."""
    _check_np(n, 0.0)
    return 1 / (1 + 2 ** (n - 1))


def w_sep_threshold(n):
    _check_np(n, 0.0)
    return n / (n + 2**n)


def cel_zero_crossing(family, n):
    """p at which the closed-form CEL of the noisy family changes sign."""
    f = {"ghz": cel_ghz_noisy, "w": cel_w_noisy}[family]
    # CEL is affine in p^2
    a = f(n, 0.0)
    b = f(n, 1.0)
    return float(np.sqrt(a / (a - b)))


def continuity_bound(n, d):
    """Upper bound on |CEL(rho) - CEL(sigma)| when their trace distance is at most d."""
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    if d < 0:
        raise DomainError(f"trace distance must be non-negative, got {d!r}")
    return (1 / 2**n + 1) * np.sqrt(2) * d


def effective_witness(circuit, params, observable):
    """``U^dag O U``: the operator the classifier effectively measures on the input."""
    if observable.width != circuit.width:
        raise DimensionError(f"observable width {observable.width} != circuit width {circuit.width}")
    u = circuit.unitary(params)
    return u.conj().T @ observable.matrix() @ u
