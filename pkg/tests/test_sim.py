import math

import numpy as np
import pytest
from scipy.linalg import expm

from crdd.control import chi1, control_trace
from crdd.sequences import PulseShape, QubitGraph, Segment, Sequence, cr_dd, sim_dd, two_color
from crdd.sim import (
    CapacityError, DeviceModel, apply_hamiltonian,
    decode_probabilities, dense_hamiltonian, encode_decode_survival, evolve,
    idle_schedule, prepare_states, product_state, sample_survival, shot_rng,
    StateSpec,
)

PI = math.pi
SQUARE = PulseShape.square()
IDEAL = PulseShape.ideal()


def two_qubit_device(j, tau_p=1.0, b=None):
    g = two_color(QubitGraph.path(2))
    bmat = np.zeros((2, 3)) if b is None else np.asarray(b, dtype=float)
    return DeviceModel(g, np.array([j], dtype=float), bmat, tau_p)


def single_qubit_device(bvec, tau_p=1.0):
    g = two_color(QubitGraph(1, ()))
    return DeviceModel(g, np.zeros(0), np.array([bvec], dtype=float), tau_p)


class TestHamiltonian:
    def test_zero_model_zero_operator(self):
        dev = two_qubit_device(0.0)
        h = dense_hamiltonian(dev, np.zeros((2, 2)))
        assert np.abs(h).max() == 0.0

    def test_dense_matches_matrix_free(self):
        rng = np.random.default_rng(0)
        g = two_color(QubitGraph(3, ((0, 1), (1, 2))))
        dev = DeviceModel(g, rng.normal(size=2), rng.normal(size=(3, 3)), 1.0)
        drives = rng.normal(size=(3, 2))
        h = dense_hamiltonian(dev, drives)
        assert np.abs(h - h.conj().T).max() < 1e-12
        psi = rng.normal(size=8) + 1j * rng.normal(size=8)
        assert np.abs(h @ psi - apply_hamiltonian(dev, drives, psi)).max() < 1e-12

    def test_matrix_free_operator_wrapper(self):
        from crdd.sim import build_hamiltonian
        rng = np.random.default_rng(4)
        dev = two_qubit_device(0.02, b=rng.normal(scale=0.1, size=(2, 3)))
        op = build_hamiltonian(dev, rng.normal(size=(2, 2)))
        psi = rng.normal(size=4) + 1j * rng.normal(size=4)
        assert np.abs(op(psi) - op.dense() @ psi).max() < 1e-12

    def test_capacity_error(self):
        g = QubitGraph(15, ())
        dev = DeviceModel(two_color(g), np.zeros(0), np.zeros((15, 3)), 1.0)
        with pytest.raises(CapacityError):
            dense_hamiltonian(dev, np.zeros((15, 2)))


class TestEvolveOracles:
    def test_zz_survival_cosine(self):
        j, t = 0.01, 5.0
        dev = two_qubit_device(j)
        psi0 = product_state(("+x", "+x"))
        psi = evolve(dev, idle_schedule(t), psi0=psi0)
        survival = abs(np.vdot(psi0, psi)) ** 2
        assert survival == pytest.approx(math.cos(j * t) ** 2, abs=1e-12)

    def test_larmor_precession(self):
        delta, t = 0.02, 7.0
        dev = single_qubit_device((0.0, 0.0, delta))
        psi0 = product_state(("+x",))
        psi = evolve(dev, idle_schedule(t), psi0=psi0)
        assert abs(np.vdot(psi0, psi)) ** 2 == pytest.approx(
            math.cos(delta * t) ** 2, abs=1e-12)

    def test_zero_noise_dd_is_identity(self):
        dev = two_qubit_device(0.0)
        sched = cr_dd("XY4", "UR12", tau_p=1.0, shape=PulseShape.gaussian_drag())
        seqs = [sched.red if c == "R" else sched.blue for c in dev.graph.coloring]
        psi0 = product_state(("+y", "-x"))
        psi = evolve(dev, seqs, repetitions=3, psi0=psi0)
        assert abs(np.vdot(psi0, psi)) ** 2 > 1 - 1e-9

    def test_sim_ideal_leaves_zz_invariant(self):
        j_tau_c = 0.02
        tau_c = 4.0  # ideal pulses: four unit delays
        dev = two_qubit_device(j_tau_c / tau_c)
        psi0 = product_state(("+x", "+x"))
        psi = evolve(dev, sim_dd("XY4", 2, 1.0, IDEAL), psi0=psi0)
        infidelity = 1 - abs(np.vdot(psi0, psi)) ** 2
        assert infidelity == pytest.approx(math.sin(j_tau_c) ** 2, rel=1e-8)

    def test_cr_suppresses_by_100x(self):
        j_tau_c = 0.02
        psi0 = product_state(("+x", "+x"))
        dev = two_qubit_device(j_tau_c / 4.0)
        psi = evolve(dev, sim_dd("XY4", 2, 1.0, IDEAL), psi0=psi0)
        inf_sim = 1 - abs(np.vdot(psi0, psi)) ** 2
        sched = cr_dd("XY4", tau_p=1.0, shape=SQUARE)
        dev = two_qubit_device(j_tau_c / 8.0)
        psi = evolve(dev, [sched.red, sched.blue], psi0=psi0, samples_per_pulse=512)
        inf_cr = 1 - abs(np.vdot(psi0, psi)) ** 2
        assert inf_sim / max(inf_cr, 1e-300) >= 100

    def test_matches_brute_force_propagator(self):
        # constant drive on qubit 0 plus couplings: compare against expm
        rng = np.random.default_rng(1)
        dev = two_qubit_device(0.03, b=rng.normal(scale=0.02, size=(2, 3)))
        seq = Sequence((Segment.for_pulse(0.7, 1.0, SQUARE),))
        psi0 = product_state(("+y", "-z"))
        psi = evolve(dev, [seq, seq], psi0=psi0, samples_per_pulse=512)
        drives = np.array([[PI * math.cos(0.7), PI * math.sin(0.7)],
                           [PI * math.cos(0.7), PI * math.sin(0.7)]])
        h = dense_hamiltonian(dev, drives)
        expected = expm(-1j * h * 1.0) @ psi0
        assert np.abs(psi - expected).max() < 1e-9

    def test_duration_mismatch(self):
        dev = two_qubit_device(0.0)
        with pytest.raises(ValueError):
            evolve(dev, [idle_schedule(1.0), idle_schedule(2.0)])

    def test_norm_preserved_long_run(self):
        dev = two_qubit_device(5e-3)
        sched = cr_dd("XY4", tau_p=1.0, shape=SQUARE)
        psi = evolve(dev, [sched.red, sched.blue], repetitions=50,
                     psi0=product_state(("+x", "+y")))
        assert abs(np.linalg.norm(psi) - 1) < 1e-9


class TestSurvival:
    def test_zero_noise_unit_survival(self):
        dev = two_qubit_device(0.0)
        sched = cr_dd("XY4", tau_p=1.0, shape=SQUARE)
        seqs = [sched.red, sched.blue]
        state = StateSpec("type1", ("+x", "+x"), "type1_+x")
        pt = encode_decode_survival(state, dev, seqs, repetitions=2, shots=200, seed=3)
        assert pt.p0_estimate == 1.0
        assert pt.pulses_applied == 8
        assert pt.duration_s == pytest.approx(16.0)

    def test_against_brute_force_oracle(self):
        # J-only free evolution of an encoded |++>: decode probabilities must
        # match the 4x4 matrix-exponential computation
        j, t = 0.04, 3.0
        dev = two_qubit_device(j)
        state = StateSpec("type1", ("+x", "+x"), "type1_+x")
        enc = product_state(state.poles)
        h = dense_hamiltonian(dev, np.zeros((2, 2)))
        probs_oracle = decode_probabilities(expm(-1j * h * t) @ enc, state.poles)
        psi = evolve(dev, idle_schedule(t), psi0=enc)
        probs = decode_probabilities(psi, state.poles)
        assert np.abs(probs - probs_oracle).max() < 1e-10
        rng = shot_rng(11)
        zeros = sample_survival(probs, 200000, rng)
        p_hat = zeros / 200000
        sigma = math.sqrt(probs_oracle[0] * (1 - probs_oracle[0]) / 200000)
        assert abs(p_hat - probs_oracle[0]) < 5 * sigma

    def test_binomial_concentration(self):
        # half-probability point of a Larmor precession
        delta = PI / 4
        dev = single_qubit_device((0.0, 0.0, delta))
        state = StateSpec("type1", ("+x",), "type1_+x")
        hits = 0
        for seed in range(100):
            pt = encode_decode_survival(state, dev, idle_schedule(1.0),
                                        repetitions=1, shots=1000, seed=seed)
            if 0.45 <= pt.p0_estimate <= 0.55:
                hits += 1
        assert hits >= 93

    def test_seeded_determinism(self):
        dev = two_qubit_device(0.01)
        state = StateSpec("type1", ("+y", "+y"), "type1_+y")
        pts = [encode_decode_survival(state, dev, idle_schedule(4.0), 1, 500, 42)
               for _ in range(2)]
        assert pts[0] == pts[1]


class TestPrepareStates:
    def test_type1_set_n1(self):
        states = prepare_states(1, count_type2=0)
        assert [s.poles[0] for s in states] == ["+z", "-z", "+x", "-x", "+y", "-y"]
        assert all(s.kind == "type1" for s in states)

    def test_deterministic(self):
        a = prepare_states(5, seed=9)
        b = prepare_states(5, seed=9)
        assert [s.poles for s in a] == [s.poles for s in b]

    def test_seeds_differ(self):
        a = prepare_states(5, seed=1)
        b = prepare_states(5, seed=2)
        assert [s.poles for s in a if s.kind == "type2"] != \
               [s.poles for s in b if s.kind == "type2"]

    def test_deduplicated(self):
        states = prepare_states(2, seed=0)
        assert len(states) == 20
        assert len({s.poles for s in states}) == 20

    def test_small_state_space_error(self):
        with pytest.raises(ValueError, match="pole assignments"):
            prepare_states(1, count_type2=14)


class TestCrossModuleConsistency:
    def test_chi2_predicts_first_order_error_amplitude(self):
        # first-order theory: residual amplitude / J equals the quantum
        # fluctuation of sum_ab chi2[a,b] sigma_a sigma_b in the encoded state
        from crdd.control import chi2, control_trace

        seq = sim_dd("XY4", 2, 1.0, SQUARE)
        tr = control_trace(seq, 512)
        c2 = chi2(tr, tr).values
        x = np.array([[0, 1], [1, 0]], complex)
        y = np.array([[0, -1j], [1j, 0]], complex)
        z = np.diag([1.0, -1.0]).astype(complex)
        paulis = (x, y, z)
        psi0 = product_state(("+x", "+x"))
        omega = sum(c2[a, b] * np.kron(paulis[a], paulis[b])
                    for a in range(3) for b in range(3))
        mean = np.vdot(psi0, omega @ psi0).real
        predicted = math.sqrt(np.vdot(psi0, omega @ omega @ psi0).real - mean ** 2)

        j = 1e-4
        dev = two_qubit_device(j)
        psi = evolve(dev, seq, psi0=psi0, samples_per_pulse=512)
        amp = np.linalg.norm(psi - np.vdot(psi0, psi) * psi0)
        assert amp / j == pytest.approx(predicted, rel=1e-4)
        assert predicted == pytest.approx(5.0, rel=1e-9)  # diag(1,1,6) fluctuation


class TestLocalityConsistency:
    def test_idle_first_order_matches_exact(self):
        tau_c = 8.0
        delta = 0.01 / tau_c
        dev = single_qubit_device((0.0, 0.0, delta))
        psi0 = product_state(("+x",))
        psi = evolve(dev, idle_schedule(tau_c), psi0=psi0)
        exact = 1 - abs(np.vdot(psi0, psi)) ** 2
        predicted = (delta * tau_c) ** 2  # chi1 = tau_c * I for idling
        assert abs(predicted - exact) / exact <= 0.1

    def test_staggered_xy4_residual_predicts_infidelity(self):
        # transverse static field couples through the (X,Z) chi1 residual
        sched = cr_dd("XY4", tau_p=1.0, shape=SQUARE)
        tau_c = sched.duration
        c1 = chi1(control_trace(sched.red, 256)).values
        b_x = 0.01 / tau_c
        dev = single_qubit_device((b_x, 0.0, 0.0))
        psi0 = product_state(("+x",))
        psi = evolve(dev, sched.red, psi0=psi0, samples_per_pulse=512)
        exact = 1 - abs(np.vdot(psi0, psi)) ** 2
        # <dOmega^2> for |+x>: Z and Y components fluctuate, X does not
        omega = b_x * c1[0, :]
        predicted = omega[1] ** 2 + omega[2] ** 2
        assert exact > 1e-10
        assert abs(predicted - exact) / exact <= 0.1
