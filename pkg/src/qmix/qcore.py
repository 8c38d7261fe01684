"""Dense multi-qubit states and the linear algebra on them.

Qubit 0 is the leftmost tensor factor, i.e. the most significant bit of a
basis index. Every module in the package uses this convention.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidStateError

MAX_DENSITY_QUBITS = 8
MAX_PURE_QUBITS = 20

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9
NORM_TOL = 1e-12


def _n_from_dim(dim):
    n = int(dim).bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise DimensionError(f"dimension {dim} is not a power of two")
    return n


def _frozen(arr):
    arr = np.array(arr, dtype=np.complex128, order="C", copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized state vector on ``n_qubits`` qubits."""

    amplitudes: np.ndarray

    def __init__(self, amplitudes, validate=True):
        amps = _frozen(np.ravel(amplitudes))
        object.__setattr__(self, "amplitudes", amps)
        if validate:
            self.validate()

    @property
    def n_qubits(self):
        return _n_from_dim(len(self.amplitudes))

    def validate(self):
        n = self.n_qubits
        if n > MAX_PURE_QUBITS:
            raise DimensionError(f"{n} qubits exceeds the pure-state limit {MAX_PURE_QUBITS}")
        norm = float(np.vdot(self.amplitudes, self.amplitudes).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidStateError(f"state norm^2 is {norm!r}, expected 1")

    def to_density(self):
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    @classmethod
    def basis(cls, bits):
        """Computational basis state from a bit string like ``"010"``."""
        vec = np.zeros(2 ** len(bits), dtype=np.complex128)
        vec[int(bits, 2)] = 1.0
        return cls(vec)

    @classmethod
    def zeros(cls, n):
        return cls.basis("0" * n)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace operator on ``n_qubits`` qubits."""

    entries: np.ndarray

    def __init__(self, entries, validate=True):
        arr = _frozen(entries)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionError(f"density matrix must be square, got shape {arr.shape}")
        object.__setattr__(self, "entries", arr)
        if validate:
            self.validate()

    @property
    def n_qubits(self):
        return _n_from_dim(self.entries.shape[0])

    @property
    def dim(self):
        return self.entries.shape[0]

    def validate(self):
        n = self.n_qubits
        if n > MAX_DENSITY_QUBITS:
            raise DimensionError(f"{n} qubits exceeds the density-matrix limit {MAX_DENSITY_QUBITS}")
        m = self.entries
        herm = float(np.max(np.abs(m - m.conj().T)))
        if herm > HERMITIAN_TOL:
            raise InvalidStateError(f"not Hermitian (max deviation {herm:.3e})")
        tr = np.trace(m)
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidStateError(f"trace is {tr!r}, expected 1")
        lo = float(np.linalg.eigvalsh(m).min())
        if lo < -PSD_TOL:
            raise InvalidStateError(f"not positive semidefinite (min eigenvalue {lo:.3e})")

    def eigh(self):
        return np.linalg.eigh(self.entries)


def qubit_set(indices, n_qubits):
    """Validate and normalize a set of qubit positions to a sorted tuple."""
    idx = tuple(int(i) for i in indices)
    if len(set(idx)) != len(idx):
        raise DimensionError(f"duplicate qubit indices in {idx}")
    for i in idx:
        if not 0 <= i < n_qubits:
            raise DimensionError(f"qubit index {i} out of range for {n_qubits} qubits")
    return tuple(sorted(idx))


def as_density(state):
    if isinstance(state, DensityMatrix):
        return state
    if isinstance(state, PureState):
        return state.to_density()
    return DensityMatrix(state)


def tensor_product(a, b):
    return DensityMatrix(np.kron(as_density(a).entries, as_density(b).entries), validate=False)


def _reduce(mat, n, keep):
    k = len(keep)
    drop = [q for q in range(n) if q not in keep]
    perm = list(keep) + drop + [n + q for q in keep] + [n + q for q in drop]
    blk = mat.reshape((2,) * (2 * n)).transpose(perm)
    blk = blk.reshape(2**k, 2 ** (n - k), 2**k, 2 ** (n - k))
    return np.trace(blk, axis1=1, axis2=3)


def partial_trace(rho, keep):
    """Reduced state on the qubits in ``keep``; the rest are traced out."""
    rho = as_density(rho)
    n = rho.n_qubits
    keep = qubit_set(keep, n)
    if len(keep) == n:
        return rho
    return DensityMatrix(_reduce(rho.entries, n, keep), validate=False)


def trace_out(rho, drop):
    rho = as_density(rho)
    n = rho.n_qubits
    drop = set(qubit_set(drop, n))
    return partial_trace(rho, [q for q in range(n) if q not in drop])


def purity(rho):
    m = as_density(rho).entries
    # Tr(rho^2) = sum_ij rho_ij rho_ji = sum |rho_ij|^2 for Hermitian rho
    return float(np.sum(np.abs(m) ** 2))


def trace_distance(rho, sigma):
    a = as_density(rho).entries
    b = as_density(sigma).entries
    if a.shape != b.shape:
        raise DimensionError(f"cannot compare {a.shape} with {b.shape}")
    diff = a - b
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def conjugate(rho, unitary):
    m = as_density(rho).entries
    return DensityMatrix(unitary @ m @ unitary.conj().T, validate=False)


# -- named states ---------------------------------------------------------


def ghz_state(n):
    vec = np.zeros(2**n, dtype=np.complex128)
    vec[0] = vec[-1] = 1 / np.sqrt(2)
    return PureState(vec)


def w_state(n):
    vec = np.zeros(2**n, dtype=np.complex128)
    for q in range(n):
        vec[1 << q] = 1 / np.sqrt(n)
    return PureState(vec)


def maximally_mixed(n):
    return DensityMatrix(np.eye(2**n) / 2**n)


def white_noise(psi, p):
    """``p |psi><psi| + (1 - p) I / 2^n``."""
    n = psi.n_qubits
    m = p * np.outer(psi.amplitudes, psi.amplitudes.conj()) + (1 - p) * np.eye(2**n) / 2**n
    return DensityMatrix(m)


def noisy_ghz(n, p):
    return white_noise(ghz_state(n), p)


def noisy_w(n, p):
    return white_noise(w_state(n), p)


def random_pure(n, rng):
    """Haar-random pure state."""
    vec = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return PureState(vec / np.linalg.norm(vec))


def random_density(n, rng, rank=None):
    """Random mixed state from a Ginibre matrix of the given rank."""
    dim = 2**n
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real)


def random_unitary(dim, rng):
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
