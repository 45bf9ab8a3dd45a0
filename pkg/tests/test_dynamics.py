import math

import numpy as np
import pytest

from resonant_gt.dynamics import (
    CONTINUOUS,
    DISCRETE,
    LambdaPolicy,
    SolverConfig,
    apply_global_phase,
    apply_relative_phase,
    compute_lambda,
    continuous_step,
    discrete_step,
    g_phi,
    phase_step,
    sigma,
    solve,
)
from resonant_gt.errors import ConfigError, MaxStepsExceeded
from resonant_gt.objectives import ConstantObjective, QuadraticMulti, QuadraticSingle
from resonant_gt.phasor import NetworkState
from resonant_gt.schedules import BetaSchedule

from conftest import make_state, phase_error


def single(mv, mi, phi=0.5):
    return NetworkState.from_masses([mv], [mi], [phi])


class TestLambda:
    def test_all_non_positive(self):
        st = single(0.5, 0.5, math.pi / 2)
        assert compute_lambda(ConstantObjective(beta=0.0), st, LambdaPolicy(1.0)) == 1.0

    def test_quadratic_corner(self):
        st = NetworkState.from_masses([1.0], [0.0], [0.5])
        assert compute_lambda(QuadraticSingle(beta=0.0), st, LambdaPolicy(1.0)) == pytest.approx(3.0)

    def test_flat(self):
        assert compute_lambda(ConstantObjective(beta=0.0), single(0.3, 0.7), LambdaPolicy(0.5)) == 0.5

    def test_shifted_gradients_positive(self):
        st = make_state(6, 3)
        obj = QuadraticMulti(beta=2.0)
        lam = compute_lambda(obj, st, LambdaPolicy(0.1))
        gv, gi, _ = obj.gradients(*st.masses(), st.phi)
        assert np.all(lam - gv >= 0.1 - 1e-15) and np.all(lam - gi >= 0.1 - 1e-15)

    def test_margin_positive(self):
        with pytest.raises(ValueError):
            LambdaPolicy(0.0)


class TestSigma:
    def test_flat_objective(self):
        st = make_state(4, 1)
        for k in range(4):
            sv, si = sigma(ConstantObjective(beta=0.0), st, k, 2.0)
            assert sv == pytest.approx(1.0) and si == pytest.approx(1.0)

    def test_hand_example(self):
        sv, si = sigma(QuadraticSingle(beta=0.0), single(0.25, 0.75), 0, 3.0)
        assert sv ** 2 == pytest.approx(1.6) and si ** 2 == pytest.approx(0.8)

    def test_boundary_node_stays_put(self):
        st = NetworkState.from_masses([0.6, 0.4], [0.0, 0.0], [0.5, 0.5])
        sv, si = sigma(QuadraticMulti(beta=0.0), st, 0, 3.0)
        assert math.isfinite(si)
        rep = discrete_step(QuadraticMulti(beta=0.0), st, SolverConfig())
        assert np.all(rep.state.masses()[1] == 0.0)


class TestDiscreteStep:
    def test_hand_example(self):
        rep = discrete_step(QuadraticSingle(beta=0.0), single(0.25, 0.75), SolverConfig(), lam=3.0)
        mv, mi = rep.state.masses()
        assert mv[0] == pytest.approx(0.4) and mi[0] == pytest.approx(0.6)
        assert rep.cost == pytest.approx(0.04) and rep.cost_before == pytest.approx(0.25)

    def test_fixed_point(self):
        st = single(0.5, 0.5, math.pi / 2)
        rep = discrete_step(QuadraticSingle(beta=1.0), st, SolverConfig(rotate=False))
        np.testing.assert_allclose(rep.state.masses(), st.masses(), atol=1e-16)
        assert rep.state.phi[0] == pytest.approx(math.pi / 2, abs=1e-15)

    def test_raw_update_keeps_subgroups(self):
        st = make_state(6, 5, [[0, 1, 2], [3, 4, 5]])
        rep = discrete_step(QuadraticMulti(beta=1.0), st, SolverConfig(omega=[0.3, 0.5]))
        assert rep.raw_residual < 1e-12

    def test_discrete_mode_rotates_by_omega_dt(self):
        st = single(0.5, 0.5, math.pi / 2)
        cfg = SolverConfig(omega=0.2, dt=0.5)
        rep = discrete_step(QuadraticSingle(beta=1.0), st, cfg)
        assert np.angle(rep.state.v[0] / st.v[0]) == pytest.approx(0.1)
        still = discrete_step(QuadraticSingle(beta=1.0), st, SolverConfig(omega=0.2, dt=0.5, rotate=False))
        assert np.angle(still.state.v[0] / st.v[0]) == 0.0


class TestPhase:
    def test_at_quadrature(self):
        assert g_phi(math.pi / 2, 0.0, 2.0) == pytest.approx(math.pi / 2)

    def test_zero_is_fixed(self):
        st = single(0.5, 0.5, 0.0)
        assert phase_step(QuadraticSingle(beta=1.0), st, 0, SolverConfig()) == 0.0

    def test_quarter_turn_target(self):
        assert g_phi(math.pi / 4, -0.25, 1.0) == pytest.approx(1.4784, abs=1e-4)
        st = single(0.5, 0.5, math.pi / 4)
        new = phase_step(QuadraticSingle(beta=1.0), st, 0, SolverConfig(tau=1.0), lam=1.0)
        assert math.pi / 4 < new <= math.pi / 2

    def test_fixed_tau_relaxation(self):
        st = single(0.5, 0.5, math.pi / 4)
        cfg = SolverConfig(mode=CONTINUOUS, dt=0.1, tau=2.0)
        new = phase_step(QuadraticSingle(beta=1.0), st, 0, cfg, lam=1.0)
        assert new == pytest.approx(math.pi / 4 + 0.05 * (g_phi(math.pi / 4, -0.25, 1.0) - math.pi / 4))

    def test_clamped(self):
        st = single(0.5, 0.5, -3.1)
        new = phase_step(QuadraticSingle(beta=1.0), st, 0, SolverConfig(tau=1e-3), lam=1.0)
        assert -math.pi <= new <= math.pi


class TestContinuous:
    def test_pure_rotation_at_fixed_point(self):
        st = single(0.5, 0.5, math.pi / 2)
        cfg = SolverConfig(mode=CONTINUOUS, omega=0.5, dt=0.01)
        rep = continuous_step(QuadraticSingle(beta=1.0), st, cfg)
        ratio = rep.state.v[0] / st.v[0]
        assert abs(ratio - (1 + 0.005j)) < 1e-4
        assert abs(abs(ratio) - 1) < 1e-12

    def test_guard(self):
        with pytest.raises(ConfigError):
            SolverConfig(mode=CONTINUOUS, omega=1.0, dt=0.2).validate()

    def test_unknown_mode(self):
        with pytest.raises(ConfigError):
            SolverConfig(mode="implicit").validate()

    def test_small_step_descends(self):
        st = make_state(3, 8)
        obj = QuadraticMulti(beta=1.0)
        rep = continuous_step(obj, st, SolverConfig(mode=CONTINUOUS, dt=0.01))
        assert rep.sigma_min < 1 < rep.sigma_max or rep.sigma_max != 1
        assert rep.cost < rep.cost_before

    def test_zero_omega_tracks_discrete(self):
        # at small dt the continuous flow follows the discrete map in pseudo-time
        st = make_state(3, 4)
        obj = QuadraticMulti(beta=0.0)
        dt = 0.01
        cfg_c = SolverConfig(mode=CONTINUOUS, omega=0.0, dt=dt, lambda_margin=1.0, backtrack=False)
        cfg_d = SolverConfig(mode=DISCRETE, omega=0.0, lambda_margin=1.0, backtrack=False)
        lam = 3.0
        sc = sd = st
        for k in range(200):
            sc = continuous_step(obj, sc, cfg_c, lam=lam).state
            if (k + 1) % 100 == 0:
                sd = discrete_step(obj, sd, cfg_d, lam=lam).state
        # one discrete step corresponds to pseudo-time 1; agreement is first order in dt
        np.testing.assert_allclose(sc.masses(), sd.masses(), atol=2e-2)


class TestSolve:
    def test_single_converges(self):
        rep = solve(QuadraticSingle(beta=1.0), make_state(1, 2), SolverConfig())
        mv, mi = rep.state.masses()
        assert rep.converged
        assert mv[0] == pytest.approx(0.5, abs=1e-4) and mi[0] == pytest.approx(0.5, abs=1e-4)
        assert phase_error(rep.state.phi)[0] < 1e-3
        assert rep.cost < 1e-8

    def test_nonresonant_keeps_dissipating(self):
        rep = solve(QuadraticMulti(beta=0.0), make_state(5, 0), SolverConfig())
        mv, mi = rep.state.masses()
        assert rep.converged
        assert float(np.sum(np.sqrt(mv * mi))) > 0.01

    def test_flat_objective_is_static(self):
        st = make_state(1, 6)
        rep = solve(ConstantObjective(beta=0.0), st, SolverConfig(omega=0.3, max_steps=50))
        np.testing.assert_allclose(rep.state.masses(), st.masses(), atol=1e-15)
        assert np.abs(rep.state.v[0]) == pytest.approx(np.abs(st.v[0]))
        assert rep.state.phi[0] == st.phi[0]

    def test_sink_sees_every_step(self):
        recs = []
        rep = solve(QuadraticMulti(beta=1.0), make_state(3, 1), SolverConfig(), sink=recs.append)
        assert [r.step for r in recs] == list(range(rep.step_index + 1))

    def test_trace_phase_invariant(self):
        recs = []
        cfg = SolverConfig(mode=CONTINUOUS, omega=0.3, dt=0.1, max_steps=200)
        rep = solve(QuadraticMulti(beta=1.0), make_state(3, 1), cfg, sink=recs.append)
        st = rep.state
        diff = np.angle(st.i) - np.angle(st.v) - st.phi
        np.testing.assert_allclose(np.angle(np.exp(1j * diff)), 0.0, atol=1e-9)

    def test_max_steps(self):
        cfg = SolverConfig(max_steps=3)
        rep = solve(QuadraticMulti(beta=1.0), make_state(4, 1), cfg)
        assert not rep.converged and rep.step_index == 3
        with pytest.raises(MaxStepsExceeded) as ei:
            solve(QuadraticMulti(beta=1.0), make_state(4, 1), cfg, strict=True)
        assert ei.value.report is not None

    def test_zero_mass_nodes_flagged(self):
        st = NetworkState.from_masses([0.5, 0.0], [0.5, 0.0], [0.5, 0.5])
        rep = solve(QuadraticMulti(beta=1.0), st, SolverConfig())
        assert rep.zero_mass_nodes == (1,)

    def test_schedule_drives_beta(self):
        recs = []
        sched = BetaSchedule.switching(0.0, 1.0, t_switch=0.3)
        solve(QuadraticMulti(beta=0.0), make_state(3, 2), SolverConfig(dt=0.01, max_steps=100), sched, recs.append)
        assert all(r.beta == 0.0 for r in recs if r.t <= 0.3 - 1e-9)
        assert recs[-1].beta == 1.0


class TestPhaseImposition:
    def _masses(self, cfg, n=3, steps=300):
        out = []
        solve(QuadraticMulti(beta=1.0), make_state(n, 9), cfg, sink=lambda r: out.append(np.concatenate([r.v_abs, r.i_abs])))
        return np.array(out)

    def test_zero_global_rate_is_baseline(self):
        cfg = SolverConfig()
        np.testing.assert_array_equal(self._masses(cfg), self._masses(apply_global_phase(cfg, 0.0)))

    def test_global_phase_keeps_masses(self):
        cfg = SolverConfig(mode=CONTINUOUS, dt=0.1)
        base = self._masses(cfg)
        rot = self._masses(apply_global_phase(cfg, math.pi / 7))
        assert base.shape == rot.shape
        np.testing.assert_allclose(base ** 2, rot ** 2, atol=1e-10)

    def test_relative_phase(self):
        cfg = SolverConfig(mode=CONTINUOUS, dt=0.01, max_steps=10000, tol_cost=0.0)
        mod = apply_relative_phase(cfg, [math.pi / 5, math.pi / 5], [-math.pi / 5, -math.pi / 5])
        res = []
        rep = solve(QuadraticMulti(beta=1.0), make_state(2, 3), mod, sink=lambda r: res.append(r.conservation_residual))
        assert rep.step_index == 10000 and max(res) < 1e-9
        short = SolverConfig(mode=CONTINUOUS, dt=0.01, max_steps=500)
        a = solve(QuadraticMulti(beta=1.0), make_state(2, 3), short)
        b = solve(QuadraticMulti(beta=1.0), make_state(2, 3), apply_relative_phase(short, [0.6, 0.6], [-0.6, -0.6]))
        np.testing.assert_allclose(np.abs(a.state.v), np.abs(b.state.v), atol=1e-12)
        assert np.max(np.abs(a.state.v - b.state.v)) > 1e-3

    def test_zero_relative_rates_is_baseline(self):
        cfg = SolverConfig()
        np.testing.assert_array_equal(self._masses(cfg), self._masses(apply_relative_phase(cfg, [0, 0, 0], [0, 0, 0])))
