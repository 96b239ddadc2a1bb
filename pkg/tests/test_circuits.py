import math
from collections import Counter

import numpy as np
import pytest

from qmcecon.circuits import (
    GateTimeModel,
    count_resources,
    decompose,
    inverse_qft,
    mcx,
    runtime,
)
from qmcecon.sim import Circuit, Gate, dense_unitary

from util import bit_reversal_matrix, dft_matrix, mcx_oracle, phase_aligned_distance, random_circuit


class TestInverseQft:
    def test_single_qubit_is_hadamard(self):
        circ = inverse_qft([0])
        assert [g.kind for g in circ.gates] == ["h"]

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_matches_inverse_dft_up_to_bit_reversal(self, n):
        u = dense_unitary(inverse_qft(range(n)))
        expect = bit_reversal_matrix(n) @ dft_matrix(n).conj().T
        np.testing.assert_allclose(u, expect, atol=1e-10)

    def test_gate_counts(self):
        counts = Counter(g.kind for g in inverse_qft(range(6)).gates)
        assert counts == {"h": 6, "cphase": 15}

    @pytest.mark.parametrize("n", [1, 2, 5, 8])
    def test_count_formula(self, n):
        counts = Counter(g.kind for g in inverse_qft(range(n)).gates)
        assert counts["h"] == n
        assert counts.get("cphase", 0) == n * (n - 1) // 2

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            inverse_qft([])


class TestMcx:
    def test_single_control_is_cnot(self):
        circ = mcx([0], 1)
        assert [g.kind for g in circ.gates] == ["cnot"]

    def test_two_controls_is_toffoli(self):
        circ = mcx([0, 1], 2)
        assert len(circ.gates) == 1
        np.testing.assert_allclose(dense_unitary(circ), mcx_oracle(3, [0, 1], 2))

    def test_ladder_with_work(self):
        # 4 controls + 2 work: exact on the work=|0> subspace, work restored
        circ = mcx([0, 1, 2, 3], 4, work=[5, 6])
        u = dense_unitary(circ)
        oracle = mcx_oracle(7, [0, 1, 2, 3], 4)
        cols = [i for i in range(128) if i & 0b11 == 0]
        assert np.max(np.abs(u[:, cols] - oracle[:, cols])) < 1e-9

    def test_ladder_gate_count(self):
        for k in (3, 4, 5, 6):
            circ = mcx(list(range(k)), k, work=list(range(k + 1, 2 * k - 1)))
            assert len(circ.gates) == 2 * k - 3

    def test_fallback_flagged_and_exact(self):
        with pytest.warns(UserWarning, match="gray-code"):
            circ = mcx([0, 1, 2], 3, work=[])
        assert circ.metadata.get("mcx_fallback") is True
        np.testing.assert_allclose(dense_unitary(circ),
                                   mcx_oracle(4, [0, 1, 2], 3), atol=1e-12)

    def test_overlap_rejected(self):
        with pytest.raises(ValueError):
            mcx([0, 1], 1)


class TestDecompose:
    def test_elementary_fixpoint(self):
        circ = Circuit(2).rx(0, 0.3).ry(1, -0.2).rz(0, 1.0).cnot(0, 1)
        out = decompose(circ)
        assert Counter(g.kind for g in out.gates) == Counter(
            g.kind for g in circ.gates)

    def test_cry_rule(self):
        circ = Circuit(2).cry(0, 1, 0.7)
        out = decompose(circ)
        assert Counter(g.kind for g in out.gates) == {"ry": 2, "cnot": 2}
        assert phase_aligned_distance(dense_unitary(circ), dense_unitary(out)) < 1e-12

    @pytest.mark.parametrize("builder", [
        lambda c: c.h(0),
        lambda c: c.x(1),
        lambda c: c.cz(0, 1),
        lambda c: c.cphase(1, 0, 0.9),
        lambda c: c.mcx([0, 1], 2),
        lambda c: c.mcx([0, 1, 2], 3),
    ])
    def test_each_rule_sound(self, builder):
        circ = Circuit(4)
        builder(circ)
        out = decompose(circ)
        assert all(g.kind in ("rx", "ry", "rz", "cnot") for g in out.gates)
        assert phase_aligned_distance(dense_unitary(circ), dense_unitary(out)) < 1e-10

    def test_randomized_soundness(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            nq = int(rng.integers(2, 7))
            circ = random_circuit(nq, 20, rng)
            out = decompose(circ)
            assert all(g.kind in ("rx", "ry", "rz", "cnot", "barrier")
                       for g in out.gates)
            err = phase_aligned_distance(dense_unitary(circ), dense_unitary(out))
            assert err < 1e-8

    def test_barrier_passes_through(self):
        circ = Circuit(2).h(0).barrier().cnot(0, 1)
        out = decompose(circ)
        assert sum(g.kind == "barrier" for g in out.gates) == 1


class TestResources:
    def test_serial_chain(self):
        circ = Circuit(2).rx(0, 1.0).rx(0, 1.0).rx(0, 1.0)
        rep = count_resources(circ)
        assert rep.total_gates == 3 and rep.depth == 3

    def test_parallel_gates(self):
        circ = Circuit(2).rx(0, 1.0).rx(1, 1.0)
        rep = count_resources(circ)
        assert rep.total_gates == 2 and rep.depth == 1

    def test_barrier_synchronizes(self):
        free = Circuit(2).rx(0, 1.0).rx(0, 1.0).rx(1, 1.0)
        assert count_resources(free).depth == 2
        synced = Circuit(2).rx(0, 1.0).rx(0, 1.0).barrier().rx(1, 1.0)
        assert count_resources(synced).depth == 3

    def test_depth_at_most_total(self):
        rng = np.random.default_rng(37)
        circ = decompose(random_circuit(5, 30, rng))
        rep = count_resources(circ)
        assert rep.depth <= rep.total_gates

    def test_depth_monotone_under_append(self):
        rng = np.random.default_rng(41)
        circ = decompose(random_circuit(4, 15, rng))
        depth = count_resources(circ).depth
        circ.rx(2, 0.1)
        assert count_resources(circ).depth >= depth

    def test_rejects_unlowered_gates(self):
        with pytest.raises(ValueError, match="decompose"):
            count_resources(Circuit(1).h(0))

    def test_runtime(self):
        rep = count_resources(Circuit(1).rx(0, 1.0))
        rep.depth = 1000
        assert runtime(rep, GateTimeModel(1e-9)) == pytest.approx(1e-6)
        assert runtime(rep, GateTimeModel(1e-4)) == pytest.approx(0.1)

    def test_runtime_needs_depth(self):
        rep = count_resources(Circuit(1))
        with pytest.raises(ValueError):
            runtime(rep, GateTimeModel(1e-9))

    def test_gate_time_positive(self):
        with pytest.raises(ValueError):
            GateTimeModel(0.0)
