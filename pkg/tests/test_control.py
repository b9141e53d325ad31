import math

import numpy as np
import pytest

from crdd.control import (
    GridMismatchError, bang_bang_trace, chi1, chi2, classify_symmetry,
    control_trace, paired_traces, propagate, verify_first_order,
)
from crdd.sequences import (
    PulseShape, PulseSpec, Segment, Sequence, cr_dd, named_phases, sim_dd,
)

PI = math.pi
SQUARE = PulseShape.square()
DRAG = PulseShape.gaussian_drag()
IDEAL = PulseShape.ideal()

X = np.array([[0, 1], [1, 0]], dtype=complex)


def ideal_xy4(tau_d, symmetric=False):
    segs = []
    if symmetric:
        segs.append(Segment.delay(tau_d / 2))
        for i, ph in enumerate(named_phases("XY4")):
            if i:
                segs.append(Segment.delay(tau_d))
            segs.append(Segment.for_pulse(ph, 0.0, IDEAL))
        segs.append(Segment.delay(tau_d / 2))
    else:
        for ph in named_phases("XY4"):
            segs.append(Segment.delay(tau_d))
            segs.append(Segment.for_pulse(ph, 0.0, IDEAL))
    return Sequence(tuple(segs), name="ideal-xy4")


class TestPropagate:
    def test_pure_delay_is_identity(self):
        grid, u = propagate(Sequence((Segment.delay(3.0),)), 64)
        assert np.abs(u - np.eye(2)).max() < 1e-15
        assert grid.times[0] == 0.0 and grid.times[-1] == 3.0

    def test_single_ideal_x_pulse(self):
        seq = Sequence((Segment.delay(1.0), Segment.for_pulse(0.0, 0.0, IDEAL)))
        _, u = propagate(seq, 32)
        assert np.abs(u[-1] - (-1j) * X).max() < 1e-14

    def test_square_pulse_midpoint_closed_form(self):
        seq = Sequence((Segment.for_pulse(0.0, 1.0, SQUARE),))
        grid, u = propagate(seq, 256)
        mid = np.argmin(np.abs(grid.times - 0.5))
        expected = math.cos(PI / 4) * np.eye(2) - 1j * math.sin(PI / 4) * X
        assert np.abs(u[mid] - expected).max() < 1e-10

    def test_unitarity_all_nodes(self):
        sched = cr_dd("KDD", tau_p=1.0, shape=DRAG)
        _, u = propagate(sched.red, 64)
        defect = np.abs(np.einsum("nji,njk->nik", u.conj(), u) - np.eye(2)).max()
        assert defect < 1e-10

    def test_rejects_coarse_sampling(self):
        with pytest.raises(ValueError):
            propagate(Sequence((Segment.delay(1.0),)), 8)

    def test_ideal_pulse_with_non_pi_flip_angle(self):
        seq = Sequence((Segment.delay(1.0),
                        Segment("pulse", 0.0,
                                PulseSpec(0.0, 0.0, IDEAL, flip_angle=PI / 2))))
        _, u = propagate(seq, 32)
        expected = math.cos(PI / 4) * np.eye(2) - 1j * math.sin(PI / 4) * X
        assert np.abs(u[-1] - expected).max() < 1e-14
        tr = bang_bang_trace(seq, 32)
        assert tr.R[-1][2, 2] == pytest.approx(0.0, abs=1e-12)  # Z tipped to -Y


class TestControlTrace:
    def test_pure_delay_identity_matrix(self):
        tr = control_trace(Sequence((Segment.delay(2.0),)), 64)
        assert np.abs(tr.R - np.eye(3)).max() < 1e-14

    def test_so3_nodes(self):
        tr = control_trace(cr_dd("XY4", tau_p=1.0, shape=DRAG).red, 64)
        prod = np.einsum("nij,nkj->nik", tr.R, tr.R)
        assert np.abs(prod - np.eye(3)).max() < 1e-8
        dets = np.linalg.det(tr.R)
        assert np.abs(dets - 1).max() < 1e-8

    def test_initial_node_identity_and_cyclic(self):
        tr = control_trace(sim_dd("XY4", 2, 1.0, SQUARE), 64)
        assert np.abs(tr.R[0] - np.eye(3)).max() < 1e-14
        assert np.abs(tr.R[-1] - np.eye(3)).max() < 1e-9

    def test_ideal_xy4_after_first_x(self):
        tr = bang_bang_trace(ideal_xy4(1.0), 32)
        idx = np.searchsorted(tr.grid.times, 1.0, side="right")
        r = tr.R[idx + 1]
        assert r[2, 2] == pytest.approx(-1.0)
        assert r[1, 1] == pytest.approx(-1.0)
        assert r[0, 0] == pytest.approx(+1.0)

    def test_square_pulse_zz_is_cos_theta(self):
        seq = Sequence((Segment.for_pulse(0.0, 1.0, SQUARE),))
        tr = control_trace(seq, 128)
        t, r = tr.uniform_view()
        theta = PI * t  # constant-rate square pulse
        assert np.abs(r[:, 2, 2] - np.cos(theta)).max() < 1e-10


class TestChi1:
    def test_pure_delay(self):
        tr = control_trace(Sequence((Segment.delay(2.5),)), 64)
        assert np.abs(chi1(tr).values - 2.5 * np.eye(3)).max() < 1e-12

    def test_ideal_xy4_first_order_suppression(self):
        tr = bang_bang_trace(ideal_xy4(1.0), 32)
        assert chi1(tr).max_abs() <= 1e-12 * tr.duration

    @pytest.mark.parametrize("shape", [SQUARE, DRAG])
    def test_cr_xy4_residual_pattern(self, shape):
        tr, tb = paired_traces(cr_dd("XY4", tau_p=1.0, shape=shape), 256)
        for trace in (tr, tb):
            c = chi1(trace)
            for m, a in np.ndindex(3, 3):
                if (m, a) in ((0, 2), (1, 2)):
                    continue
                assert abs(c.values[m, a]) <= 1e-8 * trace.duration

    @pytest.mark.parametrize("shape", [SQUARE, DRAG])
    def test_cr_ur10_residual_pattern(self, shape):
        tr, tb = paired_traces(cr_dd("UR10", tau_p=1.0, shape=shape), 256)
        allowed = {(0, 0), (0, 1), (1, 0), (1, 1)}
        for trace in (tr, tb):
            c = chi1(trace)
            for m, a in np.ndindex(3, 3):
                if (m, a) in allowed:
                    continue
                assert abs(c.values[m, a]) <= 1e-8 * trace.duration


class TestChi2:
    def test_cr_xy4_cancellation(self):
        for shape in (SQUARE, DRAG):
            tr, tb = paired_traces(cr_dd("XY4", tau_p=1.0, shape=shape), 256)
            assert chi2(tr, tb).max_abs() <= 1e-8 * tr.duration

    def test_sim_xy4_2_square_closed_form(self):
        tr = control_trace(sim_dd("XY4", 2, 1.0, SQUARE), 256)
        c = chi2(tr, tr)
        # product of Z rows is 1 on delays and cos^2 during simultaneous pulses
        assert c.entry("Z", "Z") == pytest.approx(6.0, abs=1e-6 * 8.0)
        assert abs(c.entry("X", "Y")) <= 1e-8 * 8.0

    def test_grid_mismatch(self):
        tr = control_trace(sim_dd("XY4", 2, 1.0, SQUARE), 64)
        tb = control_trace(sim_dd("XY4", 2, 1.0, SQUARE), 128)
        with pytest.raises(GridMismatchError):
            chi2(tr, tb)

    def test_entries_bounded_by_duration(self):
        from crdd.control import ErrorMatrix
        with pytest.raises(ValueError):
            ErrorMatrix("one_local", np.full((3, 3), 2.0), 1.0)


class TestVerify:
    def test_cr_kdd_passes(self):
        rep = verify_first_order(cr_dd("KDD", tau_p=1.0, shape=DRAG), 128)
        assert rep.passed

    def test_heterogeneous_passes(self):
        rep = verify_first_order(cr_dd("XY4", "UR12", tau_p=1.0, shape=DRAG), 128)
        assert rep.passed

    def test_sim_xy4_2_fails_xx_zz(self):
        rep = verify_first_order(sim_dd("XY4", 2, 1.0, SQUARE), 128)
        assert not rep.passed
        failed = {(a, b) for _, a, b, _, ok in rep.two_local_failures()}
        assert {("X", "X"), ("Z", "Z")} <= failed

    def test_rows_schema(self):
        rep = verify_first_order(cr_dd("XY4", tau_p=1.0, shape=SQUARE), 64)
        kinds = {r[0] for r in rep.rows}
        assert kinds == {"one_local_red", "one_local_blue", "two_local"}
        assert len(rep.rows) == 27

    def test_tolerance_must_be_positive(self):
        with pytest.raises(ValueError):
            verify_first_order(cr_dd("XY4", tau_p=1.0, shape=SQUARE), 64, tol=0.0)


class TestSymmetry:
    def test_cr_xy4_displacement_classes(self):
        tr, _ = paired_traces(cr_dd("XY4", tau_p=1.0, shape=DRAG), 256)
        zz = classify_symmetry(tr, "Z", "Z")
        assert zz.flag("displacement_symmetric")
        assert not zz.flag("displacement_antisymmetric")
        zx = classify_symmetry(tr, "Z", "X")
        assert zx.flag("displacement_antisymmetric")
        assert not zx.flag("displacement_symmetric")

    def test_staggered_ur12_blue_displacement_antisymmetric(self):
        sched = cr_dd("XY4", "UR12", tau_p=1.0, shape=DRAG)
        tb = control_trace(sched.blue, 256)
        for alpha in ("X", "Y"):
            comp = classify_symmetry(tb, "Z", alpha)
            assert comp.residuals["displacement_antisymmetric"] <= 1e-6
            assert comp.flag("displacement_antisymmetric")

    def test_exclusive_unless_zero(self):
        tr, _ = paired_traces(cr_dd("XY4", tau_p=1.0, shape=DRAG), 128)
        for m in "XYZ":
            for a in "XYZ":
                comp = classify_symmetry(tr, m, a)
                both = (comp.flag("displacement_symmetric")
                        and comp.flag("displacement_antisymmetric"))
                if both:
                    y = tr.component(m, a)
                    assert np.abs(y).max() < 1e-8


class TestBangBang:
    def test_ideal_xy4_zz_alternation(self):
        # five free intervals: pulses interior, half-delays at the ends
        seq = ideal_xy4(1.0, symmetric=True)
        tr = bang_bang_trace(seq, 32)
        t, zz = tr.grid.times, tr.R[:, 2, 2]
        probes = [0.25, 1.0, 2.0, 3.0, 3.75]
        expected = [1.0, -1.0, 1.0, -1.0, 1.0]
        for tp_, e in zip(probes, expected):
            idx = np.argmin(np.abs(t - tp_))
            assert zz[idx] == pytest.approx(e)

    def test_ideal_sym_asym_pair_product_integrates_to_zero(self):
        tau_d = 1.0
        asym = ideal_xy4(tau_d)
        sym = ideal_xy4(tau_d, symmetric=True)
        extra = sorted(set(asym.boundaries()) | set(sym.boundaries()))
        tr = bang_bang_trace(asym, 32, extra_breakpoints=extra, reference_duration=0.5)
        tb = bang_bang_trace(sym, 32, extra_breakpoints=extra, reference_duration=0.5)
        c = chi2(tr, tb)
        assert abs(c.entry("Z", "Z")) <= 1e-12 * tr.duration

    def test_ideal_ur10_cyclic(self):
        segs = []
        for ph in named_phases("UR10"):
            segs.append(Segment.delay(1.0))
            segs.append(Segment.for_pulse(ph, 0.0, IDEAL))
        tr = bang_bang_trace(Sequence(tuple(segs)), 32)
        assert tr.R[-1][2, 2] == pytest.approx(1.0)

    def test_rejects_bounded_pulses(self):
        with pytest.raises(ValueError):
            bang_bang_trace(sim_dd("XY4", 2, 1.0, SQUARE), 32)

    def test_matches_propagator_for_ideal_sequences(self):
        seq = ideal_xy4(0.5)
        a = bang_bang_trace(seq, 32)
        b = control_trace(seq, 32)
        assert np.abs(a.R - b.R).max() < 1e-12


class TestNumericalInvariants:
    def test_grid_refinement(self):
        sched = cr_dd("XY4", tau_p=1.0, shape=DRAG)
        vals = []
        for s in (256, 512):
            tr, tb = paired_traces(sched, s)
            vals.append((chi1(tr).values, chi2(tr, tb).values))
        for a, b in zip(vals[0], vals[1]):
            assert np.abs(a - b).max() <= 1e-9 * sched.duration

    def test_square_width_convergence_to_bang_bang(self):
        # fixed unit delays, square pulse width shrunk 1, 1/2, 1/4
        oracle = np.zeros((3, 3))
        oracle[2, 2] = 4.0
        errs = []
        for w in (1.0, 0.5, 0.25):
            segs = []
            for ph in named_phases("XY4"):
                segs.append(Segment.for_pulse(ph, w, SQUARE))
                segs.append(Segment.delay(1.0))
            tr = control_trace(Sequence(tuple(segs)), 128)
            errs.append(np.abs(chi2(tr, tr).values - oracle).max())
        orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
        assert min(orders) >= 0.9

    def test_trace_csv(self, tmp_path):
        tr = control_trace(sim_dd("XY4", 1, 1.0, SQUARE), 32)
        path = tmp_path / "trace.csv"
        tr.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == ("t_s,R_XX,R_XY,R_XZ,R_YX,R_YY,R_YZ,R_ZX,R_ZY,R_ZZ")
        assert len(lines) == 1 + len(tr.grid.times)
