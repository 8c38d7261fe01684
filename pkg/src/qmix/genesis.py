"""Labeled mixed-state dataset generation.

Entangled states come from an ansatz trained so that the CEL of its output
hits a target value, fed with locally perturbed copies of an initial state.
Separable states come from circuits in which ancillas only ever act as
controls of single-target rotations, so tracing the ancillas out leaves a
mixture of product states.

Ancillas always occupy the lowest qubit indices.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import logging

import numpy as np

from .circuits import AnsatzKind, AnsatzSpec, Circuit, Gate, build_ansatz, rotation
from . import kernels
from .entanglement import cel_mixed
from .errors import BudgetExhaustedError, ConvergenceError, DimensionError, DomainError
from .optim import Adam
from .qcore import DensityMatrix, PureState, as_density, purity

log = logging.getLogger(__name__)

ENTANGLED = 1
SEPARABLE = -1
SEPARABLE_CEL_TOL = 1e-9

_TRAIN_STREAM = 0x7A1
_SEP_STREAM = 0x5E9


def derived_rng(*keys):
    """Independent generator for a (seed, row, item, ...) key."""
    return np.random.default_rng(np.random.SeedSequence([int(k) & 0xFFFFFFFFFFFFFFFF for k in keys]))


@dataclass(frozen=True)
class Provenance:
    generator: str
    ansatz: str | None
    width: int
    depth: int
    seed: int
    index: int
    row: int = 0


@dataclass(frozen=True, eq=False)
class LabeledState:
    state: DensityMatrix
    label: int
    cel: float
    provenance: Provenance
    gate_log: Circuit | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.label == ENTANGLED and not self.cel > 0:
            raise DomainError(f"entangled label with CEL {self.cel!r} <= 0")
        if self.label == SEPARABLE and self.cel > SEPARABLE_CEL_TOL:
            raise DomainError(f"separable label with CEL {self.cel!r} > {SEPARABLE_CEL_TOL}")
        if self.label not in (ENTANGLED, SEPARABLE):
            raise DomainError(f"label must be +1 or -1, got {self.label!r}")


@dataclass(frozen=True)
class ManifestRow:
    """One row of the dataset table: ``count`` states from one ansatz shape."""

    dataset: str
    ansatz: str
    width: int
    depth: int
    count: int


@dataclass(frozen=True)
class GenConfig:
    n_target: int
    n_ancilla: int = 2
    xi: float = 0.25
    delta: float = 0.01
    epsilon: float = 0.5
    seed: int = 0
    max_iters: int = 500
    learning_rate: float = 0.05

    def __post_init__(self):
        if self.delta <= 0:
            raise DomainError("delta must be positive")
        if self.epsilon < 0:
            raise DomainError("epsilon must be non-negative")
        if self.n_target < 1 or self.n_ancilla < 0:
            raise DomainError("need n_target >= 1 and n_ancilla >= 0")


def table1_rows(n_target, count=500, n_ancilla=2, depths=(2, 3, 4, 5), kinds=("HWE", "SD", "SEA"), name=None):
    """Dataset table with the layout of the published five-qubit example."""
    name = name or f"{n_target}QUBITDATA"
    width = n_target + n_ancilla
    return [ManifestRow(name, k, width, d, count) for k in kinds for d in depths]


# -- small building blocks -----------------------------------------------------


def embed_ancillas(rho, n_ancilla):
    """``|0><0|^{n_ancilla} (x) rho`` with the ancillas in front."""
    rho = as_density(rho)
    pad = np.zeros((2**n_ancilla, 2**n_ancilla))
    pad[0, 0] = 1.0
    return DensityMatrix(np.kron(pad, rho.entries), validate=False)


def reduce_front(block, n_ancilla):
    """Trace the first ``n_ancilla`` qubits out of ``sum_k |a_k><a_k|`` (columns a_k)."""
    dim = block.shape[0]
    t = dim >> n_ancilla
    b = block.reshape(2**n_ancilla, t, -1).transpose(1, 0, 2).reshape(t, -1)
    return b @ b.conj().T


def local_rotation(n, rng, epsilon):
    """Tensor product of RZ(c) RY(b) RZ(a) with angles uniform in (-eps, eps)."""
    u = np.ones((1, 1), dtype=np.complex128)
    angles = rng.uniform(-epsilon, epsilon, size=(n, 3))
    for a, b, c in angles:
        u = np.kron(u, rotation("RZ", c) @ rotation("RY", b) @ rotation("RZ", a))
    return u


def perturb_family(rho_in, epsilon, count, seed):
    """``count`` copies of ``rho_in`` conjugated by independent small local rotations."""
    if epsilon < 0:
        raise DomainError("epsilon must be non-negative")
    rho_in = as_density(rho_in)
    n = rho_in.n_qubits
    out = []
    for i in range(count):
        if epsilon == 0:
            out.append(rho_in)
            continue
        v = local_rotation(n, derived_rng(seed, i), epsilon)
        out.append(DensityMatrix(v @ rho_in.entries @ v.conj().T, validate=False))
    return out


# -- random mixed states ----------------------------------------------------------


def random_mixed_via_ansatz(spec, n_ancilla, seed, params=None):
    """Run an ansatz with uniform random angles on |0...0> and trace out the first qubits."""
    circ = build_ansatz(spec)
    if not 0 <= n_ancilla < circ.width:
        raise DimensionError(f"need 0 <= n_ancilla < width, got {n_ancilla} for width {circ.width}")
    if params is None:
        rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
        params = rng.uniform(0, 2 * np.pi, circ.n_params)
    out = circ.apply_rows(PureState.zeros(circ.width).amplitudes, params)
    return DensityMatrix(reduce_front(out, n_ancilla), validate=False)


def purity_survey(kinds=("HWE", "SEA", "SD"), widths=(2, 3, 4, 5), depths=(1, 2, 3, 4), samples=100, seed=0,
                  n_ancilla=1):
    """Purity samples of random ansatz outputs with one traced-out ancilla.

    Returns rows ``(kind, width, depth, sample, purity)``.
    """
    rows = []
    for ki, kind in enumerate(kinds):
        for w in widths:
            for d in depths:
                spec = AnsatzSpec(kind, w, d)
                for s in range(samples):
                    rho = random_mixed_via_ansatz(spec, n_ancilla, derived_rng(seed, ki, w, d, s))
                    rows.append((AnsatzKind(kind).value, w, d, s, purity(rho)))
    return rows


# -- generator training ----------------------------------------------------------


class _GeneratorModel:
    """CEL of ``Tr_anc[U(theta) (|0><0|_anc (x) rho_in) U(theta)^dag]`` as a function of theta."""

    def __init__(self, rho_in, spec):
        rho_in = as_density(rho_in)
        self.circuit = build_ansatz(spec)
        self.n_target = rho_in.n_qubits
        self.n_ancilla = self.circuit.width - self.n_target
        if self.n_ancilla < 0:
            raise DimensionError(f"ansatz width {self.circuit.width} < target qubits {self.n_target}")
        vals, vecs = np.linalg.eigh(rho_in.entries)
        keep = vals > 1e-14
        cols = vecs[:, keep] * np.sqrt(vals[keep])
        block = np.zeros((2**self.circuit.width, cols.shape[1]), dtype=np.complex128)
        block[: cols.shape[0]] = cols
        self.block = block

    def output(self, params, angles=None, block=None):
        block = self.block if block is None else block
        out = self.circuit.apply_rows(block, params, angles)
        return reduce_front(out, self.n_ancilla)

    def cel(self, params, angles=None, block=None):
        sigma = np.ascontiguousarray(self.output(params, angles, block))
        d = sigma.shape[0]
        pur = float(np.sum(np.abs(sigma) ** 2))
        return 1 / d + (1 - 1 / d) * pur - kernels.subset_purity_sum(sigma) / d


def train_generator(rho_in, spec, xi, delta=0.01, seed=0, max_iters=500, learning_rate=0.05, fd_step=1e-4,
                    init=None, polish=0.1):
    """Angles for which the ansatz maps ``rho_in`` to a state with CEL within ``delta`` of ``xi``.

    Minimizes ``(CEL - xi)^2`` with Adam on central finite-difference
    gradients. Once inside the band the optimizer keeps polishing toward
    ``polish * delta`` so the family is not biased toward the side it
    approached from; hitting ``max_iters`` inside the band still counts as
    success. Raises :class:`ConvergenceError` (carrying the best CEL and
    angles seen) when the band is never reached.
    """
    if delta <= 0:
        raise DomainError("delta must be positive")
    model = _GeneratorModel(rho_in, spec)
    circ = model.circuit
    if init is None:
        init = generator_init(circ.n_params, seed)
    theta = np.array(init, dtype=float)
    opt = Adam(lr=learning_rate)
    best = (np.inf, theta.copy(), None)
    for it in range(max_iters + 1):
        value = model.cel(theta)
        gap = abs(value - xi)
        if gap < best[0]:
            best = (gap, theta.copy(), value)
        if gap <= polish * delta:
            log.debug("generator converged after %d steps (CEL %.6f)", it, value)
            return theta
        if it == max_iters:
            break
        grad = np.empty_like(theta)
        for k in range(len(theta)):
            tp = theta.copy()
            tp[k] += fd_step
            tm = theta.copy()
            tm[k] -= fd_step
            grad[k] = (model.cel(tp) - model.cel(tm)) / (2 * fd_step)
        theta = opt.step(theta, 2 * (value - xi) * grad)
    if best[0] <= delta:
        return best[1]
    raise ConvergenceError(
        f"CEL target {xi} not reached within {max_iters} steps (best CEL {best[2]:.6f})",
        best_value=best[2],
        best_params=best[1],
    )


def generator_init(n_params, seed):
    return derived_rng(seed, _TRAIN_STREAM).uniform(0, 2 * np.pi, n_params)


def generator_output(rho_in, spec, params):
    model = _GeneratorModel(rho_in, spec)
    return DensityMatrix(model.output(params), validate=False)


# -- entangled dataset -------------------------------------------------------------


def _entangled_row(args):
    config, row, row_id, rho_in = args
    spec = AnsatzSpec(row.ansatz, row.width, row.depth)
    n_anc = row.width - config.n_target
    if n_anc != config.n_ancilla:
        raise DimensionError(f"row width {row.width} != n_target + n_ancilla")
    train_seed = int(derived_rng(config.seed, row_id, _TRAIN_STREAM).integers(2**63))
    theta = train_generator(rho_in, spec, config.xi, config.delta, seed=train_seed,
                            max_iters=config.max_iters, learning_rate=config.learning_rate)
    model = _GeneratorModel(rho_in, spec)
    n = config.n_target
    budget = 10 * row.count
    attempts = 0
    out = []
    for i in range(row.count):
        j = 0
        while True:
            if attempts >= budget:
                raise BudgetExhaustedError(
                    f"row {row_id}: {attempts} attempts produced only {len(out)}/{row.count} states with CEL > 0"
                )
            attempts += 1
            rng = derived_rng(config.seed, row_id, i, j)
            j += 1
            v = local_rotation(n, rng, config.epsilon)
            block = model.block.copy()
            block[: 2**n] = v @ model.block[: 2**n]
            sigma = DensityMatrix(model.output(theta, block=block), validate=False)
            rep = cel_mixed(sigma)
            if rep.value > 0:
                break
        prov = Provenance("entangled", spec.kind.value, spec.width, spec.depth, config.seed, i, row_id)
        out.append(LabeledState(sigma, ENTANGLED, rep.value, prov))
    return theta, out


def generate_entangled_dataset(config, rows, rho_in=None, workers=1, return_params=False):
    """States with certified CEL > 0, one trained generator per table row.

    Output order is row order, then item index, independent of ``workers``.
    """
    if rho_in is None:
        rho_in = PureState.zeros(config.n_target).to_density()
    jobs = [(config, row, rid, rho_in) for rid, row in enumerate(rows)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_entangled_row, jobs))
    else:
        results = [_entangled_row(j) for j in jobs]
    states = [s for _, chunk in results for s in chunk]
    if return_params:
        return states, [theta for theta, _ in results]
    return states


# -- separable dataset ---------------------------------------------------------------


def separable_gate_log(n_target, n_ancilla, gates_per_state, rng):
    """Random local rotations on every qubit, then ancilla-controlled single-target rotations."""
    width = n_ancilla + n_target
    gates = []
    for q in range(width):
        a, b, c = rng.uniform(0, 2 * np.pi, 3)
        gates += [Gate("RZ", (q,), angle=a), Gate("RY", (q,), angle=b), Gate("RZ", (q,), angle=c)]
    for _ in range(gates_per_state):
        kind = ("CRX", "CRY", "CRZ")[rng.integers(3)]
        ctrl = int(rng.integers(n_ancilla))
        tgt = int(n_ancilla + rng.integers(n_target))
        gates.append(Gate(kind, (tgt,), (ctrl,), angle=float(rng.uniform(0, 2 * np.pi))))
    return Circuit(width, gates, 0, name="separable")


def generate_separable_dataset(n_target, count, seed, n_ancilla=2, gates_per_state=None):
    """Fully separable mixed states labeled -1."""
    if count < 1:
        raise DomainError("count must be >= 1")
    if n_ancilla < 1:
        raise DomainError("need at least one ancilla")
    if gates_per_state is None:
        gates_per_state = 2 * n_target
    width = n_ancilla + n_target
    out = []
    for i in range(count):
        log_circ = separable_gate_log(n_target, n_ancilla, gates_per_state, derived_rng(seed, _SEP_STREAM, i))
        psi = log_circ.apply_rows(PureState.zeros(width).amplitudes)
        rho = DensityMatrix(reduce_front(psi, n_ancilla), validate=False)
        value = cel_mixed(rho).value
        prov = Provenance("separable", None, width, gates_per_state, seed, i)
        out.append(LabeledState(rho, SEPARABLE, value, prov, gate_log=log_circ))
    return out


def separable_decomposition(gate_log, n_ancilla):
    """Expand a separable gate log as explicit weights and per-qubit pure states.

    Returns ``[(weight, [ket_0, ..., ket_{n_target-1}]), ...]`` with one entry
    per ancilla basis string.
    """
    width = gate_log.width
    n_target = width - n_ancilla
    local = [np.eye(2, dtype=np.complex128) for _ in range(width)]
    controlled = []
    for g in gate_log.gates:
        if g.controls:
            if g.controls[0] >= n_ancilla or g.targets[0] < n_ancilla:
                raise DomainError("gate log is not ancilla-controlled")
            controlled.append(g)
        else:
            if controlled:
                raise DomainError("local rotations must precede controlled rotations")
            local[g.targets[0]] = rotation(g.kind, g.angle) @ local[g.targets[0]]
    anc_amp = [local[q][:, 0] for q in range(n_ancilla)]
    terms = []
    for bits in range(2**n_ancilla):
        b = [(bits >> (n_ancilla - 1 - q)) & 1 for q in range(n_ancilla)]
        w = float(np.prod([abs(anc_amp[q][b[q]]) ** 2 for q in range(n_ancilla)]))
        kets = [local[n_ancilla + k][:, 0].copy() for k in range(n_target)]
        for g in controlled:
            if b[g.controls[0]]:
                k = g.targets[0] - n_ancilla
                kets[k] = rotation(g.kind[1:], g.angle) @ kets[k]
        terms.append((w, kets))
    return terms


def density_from_decomposition(terms):
    rho = 0
    for w, kets in terms:
        prod = np.ones(1, dtype=np.complex128)
        for k in kets:
            prod = np.kron(prod, k)
        rho = rho + w * np.outer(prod, prod.conj())
    return rho
