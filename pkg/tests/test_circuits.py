import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_ce, circuit_unitary, haar_vector, trace_norm_distance
from qmix.circuits import (
    M1,
    AnsatzKind,
    AnsatzSpec,
    Circuit,
    Gate,
    ancilla_distribution,
    ansatz_param_count,
    apply_to_density,
    apply_to_pure,
    build_ansatz,
    build_cel_circuit,
    build_noisy_ghz_prep,
    build_noisy_prep,
    build_noisy_w_prep,
    build_parallel_swap_test,
    build_purity_swap_test,
    cel_from_prep_circuit,
    estimate_cel_swap,
    noisy_prep_state,
    purification,
    sample_outcomes,
    swap_test_estimates,
)
from qmix.entanglement import ce_pure, cel, cel_ghz_noisy, cel_w_noisy
from qmix.errors import DimensionError, DomainError
from qmix.qcore import (
    DensityMatrix,
    PureState,
    ghz_state,
    maximally_mixed,
    noisy_ghz,
    noisy_w,
    purity,
    random_density,
    random_pure,
)


def random_circuit(width, n_gates, rng, n_params=4):
    kinds = ["H", "X", "RX", "RY", "RZ", "CNOT", "CZ", "CRX", "CRY", "CRZ", "CSWAP", "FIXED_1Q"]
    gates = []
    for _ in range(n_gates):
        k = kinds[rng.integers(len(kinds))]
        qs = [int(q) for q in rng.permutation(width)]
        if k == "CSWAP":
            if width < 3:
                continue
            gates.append(Gate(k, (qs[0], qs[1]), (qs[2],)))
        elif k in ("CNOT", "CZ", "CRX", "CRY", "CRZ"):
            if width < 2:
                continue
            extra = {}
            if k.startswith("CR"):
                extra = {"param": int(rng.integers(n_params)), "dagger": bool(rng.integers(2))}
            gates.append(Gate(k, (qs[0],), (qs[1],), **extra))
        elif k in ("RX", "RY", "RZ"):
            if rng.integers(2):
                gates.append(Gate(k, (qs[0],), param=int(rng.integers(n_params)), dagger=bool(rng.integers(2))))
            else:
                gates.append(Gate(k, (qs[0],), angle=float(rng.uniform(-3, 3))))
        elif k == "FIXED_1Q":
            gates.append(Gate(k, (qs[0],), matrix=M1))
        else:
            gates.append(Gate(k, (qs[0],)))
    return Circuit(width, gates, n_params)


class TestGate:
    def test_rejects_unknown(self):
        with pytest.raises(DomainError):
            Gate("T", (0,))

    def test_rejects_overlap(self):
        with pytest.raises(DomainError):
            Gate("CNOT", (0,), (0,))

    def test_fixed_must_be_unitary(self):
        with pytest.raises(DomainError):
            Gate("FIXED_1Q", (0,), matrix=np.ones((2, 2)))

    def test_rotation_needs_angle_or_slot(self):
        with pytest.raises(DomainError):
            Gate("RY", (0,))

    def test_circuit_checks_ranges(self):
        with pytest.raises(DimensionError):
            Circuit(2, [Gate("X", (2,))], 0)
        with pytest.raises(DimensionError):
            Circuit(2, [Gate("RY", (0,), param=3)], 2)

    def test_dump_lines(self):
        circ = Circuit(2, [Gate("H", (0,)), Gate("CRY", (1,), (0,), param=0)], 1)
        lines = circ.dump().splitlines()
        assert len(lines) == 3
        assert lines[1].startswith("H")
        assert lines[2].startswith("CRY 0 1")


class TestSimulation:
    def test_matches_dense_oracle(self, rng):
        for _ in range(30):
            w = int(rng.integers(1, 5))
            circ = random_circuit(w, 12, rng)
            params = rng.uniform(-np.pi, np.pi, circ.n_params)
            assert np.allclose(circ.unitary(params), circuit_unitary(circ, params), atol=1e-12)

    def test_hadamard(self):
        out = apply_to_pure(Circuit(1, [Gate("H", (0,))], 0), [], PureState.zeros(1))
        assert np.allclose(out.amplitudes, [1 / np.sqrt(2), 1 / np.sqrt(2)])

    def test_bell(self):
        circ = Circuit(2, [Gate("H", (0,)), Gate("CNOT", (1,), (0,))], 0)
        out = apply_to_pure(circ, [], PureState.zeros(2))
        assert np.allclose(out.amplitudes, np.array([1, 0, 0, 1]) / np.sqrt(2))

    def test_adjoint_round_trip(self, rng):
        for _ in range(30):
            circ = random_circuit(3, 15, rng)
            params = rng.uniform(-np.pi, np.pi, circ.n_params)
            psi = random_pure(3, rng)
            back = apply_to_pure(circ.adjoint(), params, apply_to_pure(circ, params, psi))
            assert np.allclose(back.amplitudes, psi.amplitudes, atol=1e-10)
            rho = random_density(3, rng)
            rback = apply_to_density(circ.adjoint(), params, apply_to_density(circ, params, rho))
            assert np.allclose(rback.entries, rho.entries, atol=1e-10)

    def test_norm_and_purity_preserved(self, rng):
        for _ in range(100):
            circ = random_circuit(3, 10, rng)
            params = rng.uniform(-np.pi, np.pi, circ.n_params)
            rho = random_density(3, rng)
            out = apply_to_density(circ, params, rho)
            assert purity(out) == pytest.approx(purity(rho), abs=1e-10)
            assert np.trace(out.entries).real == pytest.approx(1, abs=1e-10)

    def test_density_matches_pure(self, rng):
        circ = random_circuit(3, 12, rng)
        params = rng.uniform(-np.pi, np.pi, circ.n_params)
        psi = random_pure(3, rng)
        a = apply_to_density(circ, params, psi.to_density()).entries
        v = apply_to_pure(circ, params, psi).amplitudes
        assert np.allclose(a, np.outer(v, v.conj()), atol=1e-10)

    def test_identity_circuit(self, rng):
        rho = random_density(2, rng)
        assert np.allclose(apply_to_density(Circuit(2, [], 0), [], rho).entries, rho.entries)

    def test_param_length_checked(self):
        with pytest.raises(DimensionError):
            apply_to_pure(build_ansatz(AnsatzSpec("HWE", 2, 1)), [0.0], PureState.zeros(2))

    def test_width_checked(self):
        with pytest.raises(DimensionError):
            apply_to_pure(Circuit(2, [], 0), [], PureState.zeros(3))

    def test_compiled_program_is_not_mutated(self, rng):
        circ = build_ansatz(AnsatzSpec("SEA", 3, 2))
        before = circ.compile(np.zeros(circ.n_params))[0].copy()
        circ.unitary(rng.uniform(size=circ.n_params))
        assert np.array_equal(circ.compile(np.zeros(circ.n_params))[0], before)


class TestAnsatz:
    def test_hwe_example(self):
        c = build_ansatz(AnsatzSpec("HWE", 3, 2))
        assert c.n_params == 12 and c.count("CNOT") == 4

    def test_sea_example(self):
        c = build_ansatz(AnsatzSpec("SEA", 2, 1))
        assert c.n_params == 6 and c.count("CNOT") == 2
        pairs = [(g.controls[0], g.targets[0]) for g in c.gates if g.kind == "CNOT"]
        assert pairs == [(0, 1), (1, 0)]

    def test_sd_example(self):
        c = build_ansatz(AnsatzSpec("SD", 4, 1))
        assert c.n_params == 9
        pairs = [(g.controls[0], g.targets[0]) for g in c.gates if g.kind == "CZ"]
        assert pairs == [(0, 1), (2, 3), (1, 2)]

    def test_sea_stride_schedule(self):
        c = build_ansatz(AnsatzSpec("SEA", 4, 4))
        cnots = [(g.controls[0], g.targets[0]) for g in c.gates if g.kind == "CNOT"]
        strides = [(t - s) % 4 for s, t in cnots]
        assert strides == [1] * 4 + [2] * 4 + [3] * 4 + [1] * 4

    @pytest.mark.parametrize("kind", ["HWE", "SEA", "SD"])
    def test_param_counts(self, kind):
        for w in range(2, 9):
            for d in range(1, 7):
                spec = AnsatzSpec(kind, w, d)
                c = build_ansatz(spec)
                assert c.n_params == ansatz_param_count(spec)
                slots = sorted(g.param for g in c.gates if g.param is not None)
                assert slots == list(range(c.n_params))

    def test_spec_validation(self):
        with pytest.raises(DomainError):
            AnsatzSpec("HWE", 1, 1)
        with pytest.raises(DomainError):
            AnsatzSpec("SEA", 3, 0)
        with pytest.raises(ValueError):
            AnsatzSpec("XYZ", 3, 1)
        assert AnsatzSpec("sd", 3, 1).kind is AnsatzKind.SD
        assert AnsatzSpec(AnsatzKind.SEA, 3, 1).kind is AnsatzKind.SEA

    @pytest.mark.parametrize("kind", ["HWE", "SEA", "SD"])
    def test_ansatz_matches_oracle(self, kind, rng):
        c = build_ansatz(AnsatzSpec(kind, 3, 2))
        params = rng.uniform(-np.pi, np.pi, c.n_params)
        assert np.allclose(c.unitary(params), circuit_unitary(c, params), atol=1e-12)


class TestSwapTest:
    def test_layout(self):
        c2 = build_parallel_swap_test(2)
        assert c2.width == 6 and c2.count("H") == 4 and c2.count("CSWAP") == 2
        c3 = build_parallel_swap_test(3)
        assert c3.width == 9 and len(c3) == 9 and c3.count("CSWAP") == 3

    def test_overflow(self):
        with pytest.raises(DimensionError):
            build_parallel_swap_test(7)

    def doubled(self, v):
        n = int(np.log2(len(v)))
        anc = np.zeros(2**n)
        anc[0] = 1
        return PureState(np.kron(anc, np.kron(v, v)), validate=False)

    def test_product_input(self):
        dist = ancilla_distribution(build_parallel_swap_test(2), PureState.zeros(6), [0, 1])
        assert dist["00"] == pytest.approx(1)

    def test_bell_copies(self):
        bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
        dist = ancilla_distribution(build_parallel_swap_test(2), self.doubled(bell), [0, 1])
        assert dist["00"] == pytest.approx(0.75, abs=1e-12)
        assert sum(dist.values()) == pytest.approx(1, abs=1e-12)

    def test_copy_relabel_symmetry(self, rng):
        a, b = haar_vector(2, rng), haar_vector(2, rng)
        c = build_parallel_swap_test(2)
        anc = np.eye(1, 4, 0).ravel()
        d1 = ancilla_distribution(c, PureState(np.kron(anc, np.kron(a, b))), [0, 1])
        d2 = ancilla_distribution(c, PureState(np.kron(anc, np.kron(b, a))), [0, 1])
        assert all(d1[k] == pytest.approx(d2[k], abs=1e-12) for k in d1)

    def test_ancilla_order(self, rng):
        psi = random_pure(3, rng)
        d = ancilla_distribution(Circuit(3, [], 0), psi, [2, 0])
        probs = np.abs(psi.amplitudes.reshape(2, 2, 2)) ** 2
        assert d["10"] == pytest.approx(probs[0, :, 1].sum())

    def test_pure_ce_identity(self, rng):
        for n in (1, 2, 3, 4):
            for _ in range(10):
                v = haar_vector(n, rng)
                d = ancilla_distribution(build_parallel_swap_test(n), self.doubled(v), list(range(n)))
                assert 1 - d["0" * n] == pytest.approx(brute_ce(v), abs=1e-8)

    def test_purity_swap(self, rng):
        v = haar_vector(2, rng)
        c = build_purity_swap_test(1)
        # single-qubit marginal of v as the register content after tracing a partner
        rho = np.outer(v, v.conj()).reshape(2, 2, 2, 2).trace(axis1=1, axis2=3)
        pur = np.trace(rho @ rho).real
        psi = np.kron(np.array([1, 0]), np.einsum("ab,cd->acbd", v.reshape(2, 2), v.reshape(2, 2)).ravel())
        full = Circuit(5, c.gates, 0)
        d = ancilla_distribution(full, PureState(psi), [0])
        assert d["0"] == pytest.approx((1 + pur) / 2, abs=1e-12)

    def test_purification(self, rng):
        rho = random_density(2, rng, rank=3)
        psi, a = purification(rho)
        assert a == 2
        assert np.allclose(psi @ psi.conj().T, rho.entries, atol=1e-12)

    def test_estimates(self):
        p0, pur = swap_test_estimates(noisy_ghz(2, 0.5))
        assert pur == pytest.approx(0.4375, abs=1e-10)
        assert estimate_cel_swap(ghz_state(2).to_density()) == pytest.approx(0.25, abs=1e-8)
        assert estimate_cel_swap(noisy_ghz(2, 0.5)) == pytest.approx(cel_ghz_noisy(2, 0.5), abs=1e-8)
        assert estimate_cel_swap(maximally_mixed(2)) == pytest.approx(-0.125, abs=1e-8)

    def test_estimate_random_states(self, rng):
        for n in (1, 2, 3):
            rho = random_density(n, rng, rank=2)
            assert estimate_cel_swap(rho) == pytest.approx(cel(rho), abs=1e-8)

    def test_estimate_overflow(self, rng):
        with pytest.raises(DimensionError):
            # a full-rank 5-qubit state needs 15 + 2*5 qubits
            estimate_cel_swap(random_density(5, rng))

    def test_sampling(self, rng):
        counts = sample_outcomes({"0": 0.75, "1": 0.25}, 1000, rng)
        assert sum(counts.values()) == 1000
        assert 650 < counts["0"] < 850


class TestPreparation:
    @pytest.mark.parametrize("family,ref", [("ghz", noisy_ghz), ("w", noisy_w)])
    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_fidelity(self, family, ref, n):
        for phi in np.linspace(0, np.pi, 5):
            got = noisy_prep_state(family, n, phi).entries
            want = ref(n, np.cos(phi / 2) ** 2).entries
            assert trace_norm_distance(got, want) < 1e-9

    def test_endpoints(self):
        assert np.allclose(noisy_prep_state("ghz", 3, 0).entries, ghz_state(3).to_density().entries, atol=1e-12)
        assert np.allclose(noisy_prep_state("ghz", 3, np.pi).entries, np.eye(8) / 8, atol=1e-12)

    def test_w2_uses_fixed_matrix(self):
        fixed = [g for g in build_noisy_w_prep(2).gates if g.kind == "FIXED_1Q"]
        assert len(fixed) == 1 and np.allclose(fixed[0].matrix, M1)
        assert not [g for g in build_noisy_w_prep(3).gates if g.kind == "FIXED_1Q"]

    def test_widths(self):
        assert build_noisy_ghz_prep(3).width == 7
        assert build_cel_circuit("ghz", 2).width == 12
        assert build_cel_circuit("w", 3).width == 17

    def test_unsupported(self):
        with pytest.raises(DomainError):
            build_noisy_ghz_prep(6)
        with pytest.raises(DomainError):
            build_noisy_prep("cluster", 3)

    def test_prep_matches_oracle(self, rng):
        c = build_noisy_w_prep(2)
        assert np.allclose(c.unitary([0.7]), circuit_unitary(c, [0.7]), atol=1e-12)

    @pytest.mark.parametrize("family,f", [("ghz", cel_ghz_noisy), ("w", cel_w_noisy)])
    def test_cel_from_circuit(self, family, f):
        for phi in (0.0, 1.0, 2.0, np.pi):
            value, _ = cel_from_prep_circuit(family, 2, phi)
            assert value == pytest.approx(f(2, np.cos(phi / 2) ** 2), abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_swap_probabilities_sum_to_one(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    v = haar_vector(n, rng)
    psi = PureState(np.kron(np.eye(1, 2**n, 0).ravel(), np.kron(v, v)), validate=False)
    dist = ancilla_distribution(build_parallel_swap_test(n), psi, list(range(n)))
    assert sum(dist.values()) == pytest.approx(1, abs=1e-12)
    assert 1 - dist["0" * n] == pytest.approx(ce_pure(PureState(v)), abs=1e-8)


def test_density_validation_survives_circuit(rng):
    out = apply_to_density(build_ansatz(AnsatzSpec("SEA", 3, 3)), rng.uniform(size=27), random_density(3, rng))
    DensityMatrix(out.entries).validate()
