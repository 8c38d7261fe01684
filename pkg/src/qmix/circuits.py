"""Gates, ansatz templates, circuit simulation and swap-test circuits.

A :class:`Circuit` is an immutable gate list. Before simulation it is compiled
into flat arrays (per-gate 2x2 matrix, target bit, control mask) and handed to
the kernel in :mod:`qmix.kernels`, which updates the rows of a 2-D array in
place. State vectors are a single column; unitaries and operators use one
column per basis vector.
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property

import numpy as np

from . import kernels
from .errors import DimensionError, DomainError
from .qcore import (
    MAX_PURE_QUBITS,
    DensityMatrix,
    PureState,
    as_density,
)

GATE_KINDS = ("H", "X", "RX", "RY", "RZ", "CNOT", "CZ", "CRX", "CRY", "CRZ", "CSWAP", "FIXED_1Q")
ROTATIONS = {"RX": 0, "RY": 1, "RZ": 2, "CRX": 0, "CRY": 1, "CRZ": 2}

_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
_STATIC = {"H": _H, "X": _X, "CNOT": _X, "CZ": _Z}

#: fixed matrix used by the two-qubit W preparation
M1 = np.array([[np.sqrt(0.5), -np.sqrt(0.5)], [np.sqrt(0.5), np.sqrt(0.5)]], dtype=np.complex128)


def rotation(axis, theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    if axis in ("RX", 0):
        return np.array([[c, -1j * s], [-1j * s, c]])
    if axis in ("RY", 1):
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]])


@dataclass(frozen=True, eq=False)
class Gate:
    kind: str
    targets: tuple
    controls: tuple = ()
    param: int | None = None
    angle: float | None = None
    matrix: np.ndarray | None = None
    dagger: bool = False

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise DomainError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(self, "controls", tuple(int(c) for c in self.controls))
        n_t = 2 if self.kind == "CSWAP" else 1
        if len(self.targets) != n_t:
            raise DomainError(f"{self.kind} takes {n_t} target(s), got {self.targets}")
        if self.kind in ("CNOT", "CZ", "CRX", "CRY", "CRZ", "CSWAP") and not self.controls:
            raise DomainError(f"{self.kind} needs a control qubit")
        qubits = self.targets + self.controls
        if len(set(qubits)) != len(qubits):
            raise DomainError(f"{self.kind}: target/control indices must be distinct, got {qubits}")
        if self.kind in ROTATIONS:
            if (self.param is None) == (self.angle is None):
                raise DomainError(f"{self.kind} needs exactly one of param slot or bound angle")
        elif self.param is not None or self.angle is not None:
            raise DomainError(f"{self.kind} takes no angle")
        if self.kind == "FIXED_1Q":
            m = np.asarray(self.matrix, dtype=np.complex128)
            if m.shape != (2, 2) or not np.allclose(m.conj().T @ m, np.eye(2), atol=1e-10):
                raise DomainError("FIXED_1Q matrix must be a 2x2 unitary")
            m = m.copy()
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)

    @property
    def qubits(self):
        return self.targets + self.controls

    def adjoint(self):
        if self.kind in ROTATIONS:
            return Gate(self.kind, self.targets, self.controls, self.param, self.angle, dagger=not self.dagger)
        if self.kind == "FIXED_1Q":
            return Gate(self.kind, self.targets, self.controls, matrix=self.matrix.conj().T)
        return self

    def describe(self):
        ctrl = ",".join(map(str, self.controls)) or "-"
        tgt = ",".join(map(str, self.targets))
        if self.param is not None:
            par = f"{'-' if self.dagger else ''}theta[{self.param}]"
        elif self.angle is not None:
            par = repr(-self.angle if self.dagger else self.angle)
        elif self.kind == "FIXED_1Q":
            par = "[" + ";".join(" ".join(f"{v.real:.12g}{v.imag:+.12g}j" for v in row) for row in self.matrix) + "]"
        else:
            par = "-"
        return f"{self.kind} {ctrl} {tgt} {par}"


class AnsatzKind(str, Enum):
    HWE = "HWE"
    SEA = "SEA"
    SD = "SD"


@dataclass(frozen=True)
class AnsatzSpec:
    kind: AnsatzKind
    width: int
    depth: int

    def __post_init__(self):
        try:
            kind = self.kind if isinstance(self.kind, AnsatzKind) else AnsatzKind(str(self.kind).upper())
            object.__setattr__(self, "kind", kind)
        except ValueError:
            raise DomainError(f"unknown ansatz kind {self.kind!r}") from None
        if self.width < 2 or self.depth < 1:
            raise DomainError(f"ansatz needs width >= 2 and depth >= 1, got {self.width}x{self.depth}")


@dataclass(frozen=True, eq=False)
class Circuit:
    width: int
    gates: tuple = ()
    n_params: int = 0
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            for q in g.qubits:
                if not 0 <= q < self.width:
                    raise DimensionError(f"{g.kind} touches qubit {q} outside width {self.width}")
            if g.param is not None and not 0 <= g.param < self.n_params:
                raise DimensionError(f"param slot {g.param} outside [0, {self.n_params})")

    def __len__(self):
        return len(self.gates)

    def count(self, kind):
        return sum(g.kind == kind for g in self.gates)

    def adjoint(self):
        return Circuit(self.width, [g.adjoint() for g in reversed(self.gates)], self.n_params, self.name + "^dag")

    def widened(self, width):
        if width < self.width:
            raise DimensionError("cannot narrow a circuit")
        return Circuit(width, self.gates, self.n_params, self.name)

    def then(self, other):
        if other.width != self.width:
            raise DimensionError("widths differ")
        return Circuit(self.width, self.gates + other.gates, max(self.n_params, other.n_params), self.name)

    def dump(self):
        """Text listing, one gate per line: ``KIND controls targets param``."""
        head = f"# circuit {self.name or '-'} width={self.width} params={self.n_params} gates={len(self)}"
        return "\n".join([head] + [g.describe() for g in self.gates]) + "\n"

    # -- compilation ------------------------------------------------------

    @cached_property
    def _layout(self):
        w = self.width
        n = len(self.gates)
        mats = np.zeros((n, 2, 2), dtype=np.complex128)
        tbits = np.zeros(n, dtype=np.int64)
        tbits2 = np.zeros(n, dtype=np.int64)
        cmasks = np.zeros(n, dtype=np.int64)
        kinds = np.zeros(n, dtype=np.int64)
        rot_pos, rot_axis, rot_slot, rot_const, rot_sign = [], [], [], [], []
        for i, g in enumerate(self.gates):
            tbits[i] = 1 << (w - 1 - g.targets[0])
            for c in g.controls:
                cmasks[i] |= 1 << (w - 1 - c)
            if g.kind == "CSWAP":
                kinds[i] = 1
                tbits2[i] = 1 << (w - 1 - g.targets[1])
            elif g.kind in ROTATIONS:
                rot_pos.append(i)
                rot_axis.append(ROTATIONS[g.kind])
                rot_slot.append(-1 if g.param is None else g.param)
                rot_const.append(0.0 if g.angle is None else g.angle)
                rot_sign.append(-1.0 if g.dagger else 1.0)
            elif g.kind == "FIXED_1Q":
                mats[i] = g.matrix
            else:
                mats[i] = _STATIC[g.kind]
        rot = (
            np.array(rot_pos, dtype=np.int64),
            np.array(rot_axis, dtype=np.int64),
            np.array(rot_slot, dtype=np.int64),
            np.array(rot_const, dtype=float),
            np.array(rot_sign, dtype=float),
        )
        return mats, tbits, tbits2, cmasks, kinds, rot

    @property
    def rotation_slots(self):
        """Parameter slot of each rotation gate, in gate order (-1 for bound angles)."""
        return self._layout[5][2]

    @property
    def rotation_positions(self):
        return self._layout[5][0]

    def rotation_angles(self, params):
        params = check_params(self, params)
        _, _, slot, const, sign = self._layout[5]
        safe = np.where(slot >= 0, slot, 0)
        vals = params[safe] if len(params) else np.zeros(len(slot))
        return np.where(slot >= 0, vals, const) * sign

    def compile(self, params=(), angles=None):
        """Flat program arrays for :func:`qmix.kernels.run_program`.

        ``angles`` (one per rotation gate, signs already applied) overrides the
        angles derived from ``params``; used for per-gate shifts.
        """
        mats, tbits, tbits2, cmasks, kinds, rot = self._layout
        pos, axis = rot[0], rot[1]
        if angles is None:
            angles = self.rotation_angles(params)
        if len(pos):
            mats = mats.copy()
            c = np.cos(angles / 2)
            s = np.sin(angles / 2)
            m = mats[pos]
            rx, ry, rz = axis == 0, axis == 1, axis == 2
            m[rx] = np.stack([c[rx], -1j * s[rx], -1j * s[rx], c[rx]], axis=-1).reshape(-1, 2, 2)
            m[ry] = np.stack([c[ry], -s[ry], s[ry], c[ry]], axis=-1).reshape(-1, 2, 2)
            zero = np.zeros(int(rz.sum()))
            m[rz] = np.stack(
                [np.exp(-0.5j * angles[rz]), zero, zero, np.exp(0.5j * angles[rz])], axis=-1
            ).reshape(-1, 2, 2)
            mats[pos] = m
        return mats, tbits, tbits2, cmasks, kinds

    def apply_rows(self, block, params=(), angles=None, inplace=False):
        """Left-multiply a (2^width, m) array by the circuit unitary."""
        out = block if inplace else np.array(block, dtype=np.complex128, order="C", copy=True)
        if out.ndim == 1:
            out = out.reshape(-1, 1)
        if out.shape[0] != 2**self.width:
            raise DimensionError(f"block has {out.shape[0]} rows, circuit needs {2 ** self.width}")
        kernels.run_program(out, *self.compile(params, angles))
        return out

    def unitary(self, params=()):
        return self.apply_rows(np.eye(2**self.width, dtype=np.complex128), params)


def check_params(circuit, params):
    vals = np.asarray(params, dtype=float).ravel()
    if len(vals) != circuit.n_params:
        raise DimensionError(f"circuit takes {circuit.n_params} parameters, got {len(vals)}")
    return vals


def conjugate_rows(circuit, mat, params=(), angles=None):
    """``U M U^dag`` for Hermitian ``M`` using two row passes."""
    half = circuit.apply_rows(mat, params, angles)
    half = np.ascontiguousarray(half.conj().T)
    return circuit.apply_rows(half, params, angles, inplace=True)


def apply_to_pure(circuit, params, psi):
    if psi.n_qubits != circuit.width:
        raise DimensionError(f"state has {psi.n_qubits} qubits, circuit width is {circuit.width}")
    out = circuit.apply_rows(psi.amplitudes, params)
    return PureState(out[:, 0], validate=False)


def apply_to_density(circuit, params, rho):
    rho = as_density(rho)
    if rho.n_qubits != circuit.width:
        raise DimensionError(f"state has {rho.n_qubits} qubits, circuit width is {circuit.width}")
    check_params(circuit, params)
    return DensityMatrix(conjugate_rows(circuit, rho.entries, params), validate=False)


# -- ansatz templates -------------------------------------------------------


def build_ansatz(spec):
    """Deterministic layout of one of the three ansatz families."""
    if not isinstance(spec, AnsatzSpec):
        spec = AnsatzSpec(*spec)
    w, depth = spec.width, spec.depth
    gates = []
    slot = 0

    def rot(kind, q):
        nonlocal slot
        gates.append(Gate(kind, (q,), param=slot))
        slot += 1

    if spec.kind is AnsatzKind.HWE:
        for _ in range(depth):
            for q in range(w):
                rot("RY", q)
                rot("RZ", q)
            for q in range(w - 1):
                gates.append(Gate("CNOT", (q + 1,), (q,)))
    elif spec.kind is AnsatzKind.SEA:
        for layer in range(1, depth + 1):
            for q in range(w):
                rot("RZ", q)
                rot("RY", q)
                rot("RZ", q)
            stride = (layer - 1) % (w - 1) + 1
            for q in range(w):
                gates.append(Gate("CNOT", ((q + stride) % w,), (q,)))
    else:
        for q in range(w - 1):
            rot("RY", q)
        pairs = [(q, q + 1) for q in range(0, w - 1, 2)] + [(q, q + 1) for q in range(1, w - 1, 2)]
        for _ in range(depth):
            for a, b in pairs:
                gates.append(Gate("CZ", (b,), (a,)))
                rot("RY", a)
                rot("RY", b)
    return Circuit(w, gates, slot, name=f"{spec.kind.value}(w={w},l={depth})")


def ansatz_param_count(spec):
    w, l = spec.width, spec.depth
    return {
        AnsatzKind.HWE: 2 * w * l,
        AnsatzKind.SEA: 3 * w * l,
        AnsatzKind.SD: (w - 1) + 2 * l * (w - 1),
    }[AnsatzKind(spec.kind)]


# -- swap test ----------------------------------------------------------------


def build_parallel_swap_test(n):
    """H on n ancillas, CSWAP(k; copy1[k], copy2[k]) for each k, H again.

    Layout: ancillas ``0..n-1``, first copy ``n..2n-1``, second copy ``2n..3n-1``.
    """
    if n < 1:
        raise DomainError("swap test needs at least one qubit per copy")
    if 3 * n > MAX_PURE_QUBITS:
        raise DimensionError(f"swap test on {n} qubits needs width {3 * n} > {MAX_PURE_QUBITS}")
    gates = [Gate("H", (k,)) for k in range(n)]
    gates += [Gate("CSWAP", (n + k, 2 * n + k), (k,)) for k in range(n)]
    gates += [Gate("H", (k,)) for k in range(n)]
    return Circuit(3 * n, gates, 0, name=f"parallel-swap({n})")


def build_purity_swap_test(n):
    """Single-ancilla swap test over the whole register: P(0) = (1 + Tr rho^2) / 2."""
    gates = [Gate("H", (0,))]
    gates += [Gate("CSWAP", (1 + k, 1 + n + k), (0,)) for k in range(n)]
    gates += [Gate("H", (0,))]
    return Circuit(2 * n + 1, gates, 0, name=f"purity-swap({n})")


def ancilla_distribution(circuit, state, ancillas, params=()):
    """Exact outcome distribution of the given ancilla qubits after ``circuit``.

    Returns ``{bitstring: probability}`` with bits ordered as in ``ancillas``.
    """
    if state.n_qubits != circuit.width:
        raise DimensionError(f"state has {state.n_qubits} qubits, circuit width is {circuit.width}")
    w = circuit.width
    out = circuit.apply_rows(state.amplitudes, params)[:, 0]
    probs = (np.abs(out) ** 2).reshape((2,) * w)
    others = tuple(q for q in range(w) if q not in ancillas)
    marg = probs.sum(axis=others) if others else probs
    order = sorted(ancillas)
    marg = np.transpose(marg, [order.index(q) for q in ancillas])
    flat = marg.reshape(-1)
    k = len(ancillas)
    return {format(i, f"0{k}b"): float(p) for i, p in enumerate(flat)}


def purification(rho, tol=1e-14):
    """Return (matrix Psi of shape (2^n, 2^a), a) with rho = Psi Psi^dag."""
    rho = as_density(rho)
    vals, vecs = rho.eigh()
    keep = vals > tol
    vals, vecs = vals[keep][::-1], vecs[:, keep][:, ::-1]
    r = len(vals)
    a = max(0, int(np.ceil(np.log2(r)))) if r > 1 else 0
    psi = np.zeros((rho.dim, 2**a), dtype=np.complex128)
    psi[:, :r] = vecs * np.sqrt(vals)
    return psi / np.linalg.norm(psi), a


def _doubled_input(psi, n, a, n_swap_anc):
    """|0...0>_anc (x) |Psi>|Psi> laid out as [anc][sys1][sys2][pur1][pur2]."""
    two = np.einsum("ik,jl->ijkl", psi, psi).reshape(-1)
    vec = np.zeros(2 ** (n_swap_anc + 2 * (n + a)), dtype=np.complex128)
    vec[: len(two)] = two
    return PureState(vec, validate=False)


def swap_test_estimates(rho):
    """Swap-test readouts on two copies of a purification of ``rho``.

    Returns ``(p_all_zero, purity_estimate)`` where ``p_all_zero`` is the
    probability that every parallel-swap ancilla reads 0 and the purity comes
    from the single-ancilla full-register swap test.
    """
    rho = as_density(rho)
    n = rho.n_qubits
    psi, a = purification(rho)
    width = 3 * n + 2 * a
    if width > MAX_PURE_QUBITS:
        raise DimensionError(f"swap-test estimate needs {width} qubits > {MAX_PURE_QUBITS}")
    par = Circuit(width, build_parallel_swap_test(n).gates, 0)
    dist = ancilla_distribution(par, _doubled_input(psi, n, a, n), list(range(n)))
    p0 = dist["0" * n]
    full = Circuit(1 + 2 * (n + a), build_purity_swap_test(n).gates, 0)
    pdist = ancilla_distribution(full, _doubled_input(psi, n, a, 1), [0])
    return p0, 2 * pdist["0"] - 1


def estimate_cel_swap(rho):
    """Mixed-state CE lower bound from swap-test probabilities alone."""
    n = as_density(rho).n_qubits
    p0, pur = swap_test_estimates(rho)
    return 1 / 2**n + (1 - 1 / 2**n) * pur - p0


# -- noisy GHZ / W preparation ------------------------------------------------


def _noise_branch(n):
    # Conditioned on the noise control (qubit 0) being |1>, pair every system
    # qubit with its own ancilla in a Bell state, so the system is I / 2^n.
    gates = [Gate("CRY", (1 + k,), (0,), angle=np.pi / 2) for k in range(n)]
    gates += [Gate("CNOT", (1 + n + k,), (1 + k,)) for k in range(n)]
    return gates


def _check_prep_n(n):
    if not 2 <= n <= 5:
        raise DomainError(f"noisy-state preparation supports 2 <= n <= 5, got {n}")


def build_noisy_ghz_prep(n):
    """Prepare p|GHZ_n><GHZ_n| + (1-p) I/2^n on the last n of 2n+1 qubits.

    Qubit 0 carries RY(phi) with p = cos^2(phi/2); qubits 1..n are the noise
    ancillas; qubits n+1..2n hold the prepared state.
    """
    _check_prep_n(n)
    sys = [1 + n + k for k in range(n)]
    gates = [Gate("RY", (0,), param=0), Gate("X", (0,))]
    gates.append(Gate("CRY", (sys[0],), (0,), angle=np.pi / 2))
    gates.append(Gate("X", (0,)))
    gates += [Gate("CNOT", (sys[k + 1],), (sys[k],)) for k in range(n - 1)]
    gates += _noise_branch(n)
    return Circuit(2 * n + 1, gates, 1, name=f"noisy-ghz({n})")


def build_noisy_w_prep(n):
    """Same register layout as :func:`build_noisy_ghz_prep`, preparing W_n.

    The excitation starts on the first system qubit and is handed down the
    chain; step k keeps weight 1/(n-k+1) of what remains.
    """
    _check_prep_n(n)
    sys = [1 + n + k for k in range(n)]
    gates = [Gate("RY", (0,), param=0), Gate("X", (0,))]
    gates.append(Gate("CNOT", (sys[0],), (0,)))
    gates.append(Gate("X", (0,)))
    for k in range(1, n):
        prev, cur = sys[k - 1], sys[k]
        if n == 2:
            gates.append(Gate("FIXED_1Q", (cur,), (prev,), matrix=M1))
        else:
            theta = 2 * np.arccos(np.sqrt((n - k) / (n - k + 1)))
            gates.append(Gate("CRY", (cur,), (prev,), angle=theta))
        gates.append(Gate("CNOT", (cur,), (prev,)))
        gates.append(Gate("CNOT", (prev,), (cur,)))
    gates += _noise_branch(n)
    return Circuit(2 * n + 1, gates, 1, name=f"noisy-w({n})")


def build_noisy_prep(family, n):
    family = family.lower()
    if family == "ghz":
        return build_noisy_ghz_prep(n)
    if family == "w":
        return build_noisy_w_prep(n)
    raise DomainError(f"unknown family {family!r} (expected ghz or w)")


def noisy_prep_state(family, n, phi):
    """Reduced system state produced by the preparation circuit at angle ``phi``."""
    circ = build_noisy_prep(family, n)
    out = circ.apply_rows(PureState.zeros(circ.width).amplitudes, [phi])[:, 0]
    block = out.reshape(2 ** (n + 1), 2**n)
    return DensityMatrix(block.T @ block.conj(), validate=False)


def build_cel_circuit(family, n, parallel=True):
    """Two preparation copies followed by a swap test on their system qubits.

    With ``parallel`` (the default) there are ``n`` swap ancillas, one per
    qubit pair, for a total width of ``5n + 2``. Otherwise a single ancilla
    controls every pair and the all-zero probability is ``(1 + Tr rho^2) / 2``.
    The circuit has the single parameter ``phi``.
    """
    prep = build_noisy_prep(family, n)
    pw = prep.width
    n_anc = n if parallel else 1
    width = n_anc + 2 * pw
    if width > MAX_PURE_QUBITS:
        raise DimensionError(f"CEL circuit for n={n} needs {width} qubits > {MAX_PURE_QUBITS}")

    def shifted(g, off):
        return Gate(g.kind, [t + off for t in g.targets], [c + off for c in g.controls],
                    g.param, g.angle, g.matrix, g.dagger)

    gates = [shifted(g, n_anc) for g in prep.gates] + [shifted(g, n_anc + pw) for g in prep.gates]
    sys1 = [n_anc + pw - n + k for k in range(n)]
    sys2 = [n_anc + 2 * pw - n + k for k in range(n)]
    gates += [Gate("H", (k,)) for k in range(n_anc)]
    gates += [Gate("CSWAP", (sys1[k], sys2[k]), (k if parallel else 0,)) for k in range(n)]
    gates += [Gate("H", (k,)) for k in range(n_anc)]
    kind = "cel" if parallel else "purity"
    return Circuit(width, gates, 1, name=f"{kind}-{family}({n})")


def cel_from_prep_circuit(family, n, phi):
    """CEL of the noisy family read off the preparation + swap-test circuits.

    Returns ``(cel, p_all_zero)``; both swap tests are evaluated exactly.
    """
    circ = build_cel_circuit(family, n)
    p0 = ancilla_distribution(circ, PureState.zeros(circ.width), list(range(n)), params=[phi])["0" * n]
    pcirc = build_cel_circuit(family, n, parallel=False)
    pz = ancilla_distribution(pcirc, PureState.zeros(pcirc.width), [0], params=[phi])["0"]
    return 1 / 2**n + (1 - 1 / 2**n) * (2 * pz - 1) - p0, p0


def sample_outcomes(dist, shots, rng):
    """Draw ``shots`` outcomes from an exact distribution; demonstration only."""
    keys = sorted(dist)
    probs = np.array([dist[k] for k in keys])
    counts = rng.multinomial(shots, probs / probs.sum())
    return {k: int(c) for k, c in zip(keys, counts) if c}
