"""Variational entangled-vs-separable classifier.

The classifier measures Z on the last target qubit after the ansatz. An
n-qubit input fed to a wider circuit is padded with |0> qubits on the highest
indices. Training minimizes the mean-squared error between the raw
expectation and the +/-1 label; reported labels threshold the expectation
(exactly 0 maps to -1).
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .circuits import AnsatzSpec, build_ansatz, check_params, rotation
from .errors import DatasetError, DimensionError, DomainError
from .genesis import derived_rng
from .optim import Adam
from .qcore import DensityMatrix, as_density, ghz_state, random_unitary, w_state

SHIFT = np.pi / 2
# four-term shift rule for controlled rotations (eigenvalues 0, +-1/2)
_C_PLUS = (np.sqrt(2) + 1) / (4 * np.sqrt(2))
_C_MINUS = (np.sqrt(2) - 1) / (4 * np.sqrt(2))


@dataclass(frozen=True)
class ObservableSpec:
    """Pauli Z on the last target-register qubit of a ``width``-qubit circuit."""

    width: int
    n_target: int | None = None

    def __post_init__(self):
        if self.n_target is None:
            object.__setattr__(self, "n_target", self.width)
        if not 1 <= self.n_target <= self.width:
            raise DimensionError(f"target register of {self.n_target} qubits does not fit width {self.width}")

    @property
    def qubit(self):
        return self.n_target - 1

    def diagonal(self):
        idx = np.arange(2**self.width)
        bit = (idx >> (self.width - 1 - self.qubit)) & 1
        return 1.0 - 2.0 * bit

    def matrix(self):
        return np.diag(self.diagonal()).astype(np.complex128)


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    iterations: int = 100
    learning_rate: float = 0.05
    seed: int = 0
    train_fraction: float = 0.75

    def __post_init__(self):
        if self.batch_size < 1 or self.iterations < 1:
            raise DomainError("batch_size and iterations must be >= 1")
        if not 0 < self.train_fraction < 1:
            raise DomainError("train_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def as_dict(self):
        return {"accuracy": self.accuracy, "precision": self.precision, "recall": self.recall, "f1": self.f1}


@dataclass(eq=False)
class TrainRecord:
    spec: AnsatzSpec
    params: np.ndarray
    loss_trajectory: list = field(default_factory=list)
    batch_accuracy_trajectory: list = field(default_factory=list)
    metrics: Metrics | None = None
    train_metrics: Metrics | None = None
    n_target: int = 0


# -- state handling -------------------------------------------------------------------


def _stack(states):
    mats = []
    for s in states:
        rho = s.state if hasattr(s, "state") else s
        mats.append(as_density(rho).entries)
    return np.ascontiguousarray(np.stack(mats))


def _labels(states):
    return np.array([s.label for s in states], dtype=float)


def _embed_columns(n_state, width):
    if n_state > width:
        raise DimensionError(f"{n_state}-qubit state does not fit a width-{width} circuit")
    pad = width - n_state
    cols = np.zeros((2**width, 2**n_state), dtype=np.complex128)
    cols[np.arange(2**n_state) << pad, np.arange(2**n_state)] = 1.0
    return cols


def witness(circuit, params, obs, n_state):
    """Operator W on the n-qubit input space with ``Tr(rho W)`` = classifier expectation."""
    if obs.width != circuit.width:
        raise DimensionError(f"observable width {obs.width} != circuit width {circuit.width}")
    if obs.n_target > n_state:
        raise DimensionError("observable acts outside the input register")
    v = circuit.apply_rows(_embed_columns(n_state, circuit.width), params)
    return (v.conj().T * obs.diagonal()) @ v


def _expectations(rhos, w):
    return np.einsum("bij,ji->b", rhos, w).real


def predict(circuit, params, rho, obs):
    """Return ``(expectation, label)`` for one input state."""
    rho = as_density(rho)
    w = witness(circuit, params, obs, rho.n_qubits)
    e = float(np.einsum("ij,ji->", rho.entries, w).real)
    return e, 1 if e > 0 else -1


def predict_batch(circuit, params, rhos, obs):
    n = rhos.shape[-1].bit_length() - 1
    e = _expectations(rhos, witness(circuit, params, obs, n))
    return e, np.where(e > 0, 1, -1)


def mse_loss(batch, circuit, params, obs):
    if not len(batch):
        raise DatasetError("empty batch")
    rhos = _stack(batch)
    e, _ = predict_batch(circuit, params, rhos, obs)
    return float(np.mean((e - _labels(batch)) ** 2))


# -- parameter-shift gradients ------------------------------------------------------------


def _single(program, k, adjoint=False):
    mats, tbits, tbits2, cmasks, kinds = program
    m = mats[k : k + 1]
    if adjoint:
        m = np.ascontiguousarray(m.conj().transpose(0, 2, 1))
    return m, tbits[k : k + 1], tbits2[k : k + 1], cmasks[k : k + 1], kinds[k : k + 1]


def _conj_by_adjoint(program, k, op):
    """``g^dag op g`` for Hermitian ``op`` and gate k of the program."""
    sub = _single(program, k, adjoint=True)
    a = np.array(op, order="C", copy=True)
    kernels.run_program(a, *sub)
    a = np.ascontiguousarray(a.conj().T)
    kernels.run_program(a, *sub)
    return a


def expectation_jacobian(circuit, params, rhos, obs):
    """Return (expectations, d expectation / d params) for a stack of input states.

    Uses the two-term shift rule (+-pi/2) for plain rotations and the
    four-term rule for controlled rotations, accumulating over every gate that
    shares a parameter slot.
    """
    params = check_params(circuit, params)
    n = rhos.shape[-1].bit_length() - 1
    if obs.width != circuit.width:
        raise DimensionError(f"observable width {obs.width} != circuit width {circuit.width}")
    angles = circuit.rotation_angles(params)
    program = circuit.compile(params)
    rot_pos = circuit.rotation_positions
    slots = circuit.rotation_slots
    _, _, _, _, signs = circuit._layout[5]
    active = {int(p): i for i, p in enumerate(rot_pos) if slots[i] >= 0}

    # forward: the embedded input columns before each parametrized gate
    x = _embed_columns(n, circuit.width)
    before = {}
    for k in range(len(circuit.gates)):
        if k in active:
            before[k] = x.copy()
        kernels.run_program(x, *_single(program, k))
    w_final = (x.conj().T * obs.diagonal()) @ x
    expect = _expectations(rhos, w_final)

    # backward: the observable pulled back through the gates after each one
    jac = np.zeros((len(rhos), circuit.n_params))
    op = np.diag(obs.diagonal()).astype(np.complex128)
    for k in range(len(circuit.gates) - 1, -1, -1):
        if k in active:
            i = active[k]
            gate = circuit.gates[k]
            controlled = bool(gate.controls)
            shifts = [(SHIFT, 0.5), (-SHIFT, -0.5)]
            if controlled:
                shifts = [(SHIFT, _C_PLUS), (-SHIFT, -_C_PLUS), (3 * SHIFT, -_C_MINUS), (-3 * SHIFT, _C_MINUS)]
            axis = gate.kind[-2:]
            d_angle = np.zeros(len(rhos))
            for s, coef in shifts:
                m = _conj_single(program, k, rotation(axis, angles[i] + s), op)
                l_k = before[k]
                w = l_k.conj().T @ m @ l_k
                d_angle += coef * _expectations(rhos, w)
            jac[:, slots[i]] += signs[i] * d_angle
        op = _conj_by_adjoint(program, k, op)
    return expect, jac


def _conj_single(program, k, u, op):
    """``g'^dag op g'`` where g' is gate k with its 2x2 block replaced by ``u``.

    Controls stay in the program's control mask, so ``u`` is only the target block.
    """
    mats, tbits, tbits2, cmasks, kinds = program
    sub = (np.ascontiguousarray(u.conj().T[None]), tbits[k : k + 1], tbits2[k : k + 1], cmasks[k : k + 1],
           kinds[k : k + 1])
    a = np.array(op, order="C", copy=True)
    kernels.run_program(a, *sub)
    a = np.ascontiguousarray(a.conj().T)
    kernels.run_program(a, *sub)
    return a


def gradient(batch, circuit, params, obs):
    """Gradient of :func:`mse_loss` with respect to the circuit parameters."""
    if not len(batch):
        raise DatasetError("empty batch")
    if circuit.n_params == 0:
        return np.zeros(0)
    rhos = _stack(batch)
    e, jac = expectation_jacobian(circuit, params, rhos, obs)
    resid = e - _labels(batch)
    return 2.0 * resid @ jac / len(batch)


# -- metrics --------------------------------------------------------------------------------


def metrics_from_predictions(y_true, y_pred):
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if not len(y_true):
        raise DatasetError("empty test set")
    tp = int(np.sum((y_pred == 1) & (y_true == 1)))
    fp = int(np.sum((y_pred == 1) & (y_true != 1)))
    fn = int(np.sum((y_pred != 1) & (y_true == 1)))
    tn = int(np.sum((y_pred != 1) & (y_true != 1)))
    acc = (tp + tn) / len(y_true)
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    return Metrics(acc, prec, rec, f1, tp, fp, tn, fn)


def evaluate(circuit, params, testset, obs):
    if not len(testset):
        raise DatasetError("empty test set")
    _, pred = predict_batch(circuit, params, _stack(testset), obs)
    return metrics_from_predictions(_labels(testset), pred)


# -- training ----------------------------------------------------------------------------------


def stratified_split(labels, fraction, seed):
    """Index arrays (train, test) keeping the label ratio in both parts."""
    labels = np.asarray(labels)
    rng = derived_rng(seed, 0x5B1)
    train, test = [], []
    for lab in (1, -1):
        idx = np.flatnonzero(labels == lab)
        idx = idx[rng.permutation(len(idx))]
        cut = int(round(fraction * len(idx)))
        train.append(idx[:cut])
        test.append(idx[cut:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def init_params(n_params, seed):
    return derived_rng(seed, 0x1A17).uniform(-np.pi, np.pi, n_params)


def train_classifier(dataset, spec, config=TrainConfig(), obs=None, params=None):
    """Train on a seeded stratified split and report metrics on the held-out part."""
    labels = _labels(dataset)
    if len(set(labels.tolist())) < 2:
        raise DatasetError("dataset must contain both labels")
    if not isinstance(spec, AnsatzSpec):
        spec = AnsatzSpec(*spec)
    circuit = build_ansatz(spec)
    rhos = _stack(dataset)
    n = rhos.shape[-1].bit_length() - 1
    if obs is None:
        obs = ObservableSpec(circuit.width, n)
    train_idx, test_idx = stratified_split(labels, config.train_fraction, config.seed)
    order = train_idx[derived_rng(config.seed, 0xBA7C).permutation(len(train_idx))]
    theta = init_params(circuit.n_params, config.seed) if params is None else np.array(params, dtype=float)
    opt = Adam(lr=config.learning_rate)
    record = TrainRecord(spec, theta, n_target=n)
    bs = min(config.batch_size, len(order))
    for it in range(config.iterations):
        start = (it * bs) % len(order)
        batch = np.take(order, np.arange(start, start + bs), mode="wrap")
        r_b, y_b = rhos[batch], labels[batch]
        e, jac = expectation_jacobian(circuit, theta, r_b, obs)
        grad = 2.0 * (e - y_b) @ jac / len(batch)
        theta = opt.step(theta, grad)
        e_new, pred = predict_batch(circuit, theta, r_b, obs)
        record.loss_trajectory.append(float(np.mean((e_new - y_b) ** 2)))
        record.batch_accuracy_trajectory.append(float(np.mean(pred == y_b)))
    record.params = theta
    _, pred = predict_batch(circuit, theta, rhos[test_idx], obs)
    record.metrics = metrics_from_predictions(labels[test_idx], pred)
    _, pred = predict_batch(circuit, theta, rhos[train_idx], obs)
    record.train_metrics = metrics_from_predictions(labels[train_idx], pred)
    return record


# -- threshold-labeled noisy families --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NoisyItem:
    """White-noise family member labeled by the exact separability threshold."""

    state: DensityMatrix
    label: int
    p: float


def noisy_family_dataset(family, n, count, seed, local_frames=True):
    """Balanced set of ``p|psi><psi| + (1-p) I/2^n`` labeled +1 iff p exceeds the threshold.

    Half the items draw p uniformly below the threshold and half above. With
    ``local_frames`` each state is conjugated by a Haar-random product of
    single-qubit unitaries, which preserves the label.
    """
    from .entanglement import ghz_sep_threshold, w_sep_threshold

    if count < 2:
        raise DomainError("count must be >= 2")
    psi, thr = {"ghz": (ghz_state, ghz_sep_threshold), "w": (w_state, w_sep_threshold)}[family]
    thr = thr(n)
    vec = psi(n).amplitudes
    proj = np.outer(vec, vec.conj())
    eye = np.eye(2**n) / 2**n
    out = []
    for i in range(count):
        rng = derived_rng(seed, 0x6E0, i)
        label = 1 if i % 2 == 0 else -1
        p = rng.uniform(thr, 1.0) if label == 1 else rng.uniform(0.0, thr)
        rho = p * proj + (1 - p) * eye
        if local_frames:
            u = np.ones((1, 1))
            for _ in range(n):
                u = np.kron(u, random_unitary(2, rng))
            rho = u @ rho @ u.conj().T
        out.append(NoisyItem(DensityMatrix(rho, validate=False), label, float(p)))
    return out


# -- benchmark grid -----------------------------------------------------------------------------

TRAJECTORY_HEADER = ("n", "ansatz", "width", "depth", "seed", "iteration", "loss", "batch_accuracy")
FINAL_HEADER = ("n", "ansatz", "width", "depth", "seed", "accuracy", "precision", "recall", "f1")


def benchmark_grid(n, kinds=("HWE", "SEA", "SD"), width_offsets=(0, 1, 2, 3), depths=(3, 4, 5, 6)):
    return [AnsatzSpec(k, max(2, n + off), d) for k in kinds for off in width_offsets for d in depths]


def _bench_job(args):
    n, spec, seed, dataset, cfg = args
    rec = train_classifier(dataset, spec, TrainConfig(cfg.batch_size, cfg.iterations, cfg.learning_rate, seed,
                                                      cfg.train_fraction))
    return n, spec, seed, rec


def benchmark_suite(datasets, kinds=("HWE", "SEA", "SD"), width_offsets=(0, 1, 2, 3), depths=(3, 4, 5, 6),
                    seeds=(0,), config=TrainConfig(), workers=1):
    """Train every (kind, width, depth, seed) on each n-qubit dataset.

    Returns ``(trajectory_rows, final_rows)`` with the column order of
    ``TRAJECTORY_HEADER`` and ``FINAL_HEADER``.
    """
    jobs = []
    for n in sorted(datasets):
        if not datasets[n]:
            raise DatasetError(f"missing dataset for n={n}")
        for spec in benchmark_grid(n, kinds, width_offsets, depths):
            for seed in seeds:
                jobs.append((n, spec, seed, datasets[n], config))
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_bench_job, jobs))
    else:
        results = [_bench_job(j) for j in jobs]
    traj, final = [], []
    for n, spec, seed, rec in results:
        kind = spec.kind.value
        for it, (loss, acc) in enumerate(zip(rec.loss_trajectory, rec.batch_accuracy_trajectory)):
            traj.append((n, kind, spec.width, spec.depth, seed, it, loss, acc))
        m = rec.metrics
        final.append((n, kind, spec.width, spec.depth, seed, m.accuracy, m.precision, m.recall, m.f1))
    return traj, final


def average_trajectories(traj_rows):
    """Mean batch accuracy per (n, ansatz, iteration) across the grid."""
    acc = {}
    for n, kind, _w, _d, _s, it, _loss, a in traj_rows:
        acc.setdefault((n, kind, it), []).append(a)
    return {k: float(np.mean(v)) for k, v in sorted(acc.items())}


__all__ = [
    "ObservableSpec", "TrainConfig", "TrainRecord", "Metrics", "predict", "predict_batch", "mse_loss",
    "gradient", "expectation_jacobian", "evaluate", "train_classifier", "benchmark_suite", "witness",
    "metrics_from_predictions", "stratified_split", "NoisyItem", "noisy_family_dataset",
]
