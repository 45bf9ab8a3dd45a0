import math

import numpy as np
import pytest

from resonant_gt.errors import DomainError, NotResonantNode
from resonant_gt.objectives import QuadraticMulti
from resonant_gt.phasor import NetworkState
from resonant_gt.power import equivalent_lc, lc_resonance_check, power_report

from conftest import make_state


def one(mv, mi, phi):
    return NetworkState.from_masses([mv], [mi], [phi])


class TestPowerReport:
    def test_quadrature(self):
        st = NetworkState.from_masses([0.2, 0.3], [0.1, 0.4], [math.pi / 2, -math.pi / 2])
        rep = power_report(st)
        np.testing.assert_allclose(rep.per_node_active, 0.0, atol=1e-16)
        assert rep.dissipation_D < 1e-32

    def test_in_phase(self):
        rep = power_report(one(0.5, 0.5, 0.0))
        assert rep.per_node_active[0] == pytest.approx(0.5)
        assert rep.per_node_reactive[0] == pytest.approx(0.0, abs=1e-16)

    def test_quarter(self):
        rep = power_report(one(0.5, 0.5, math.pi / 4))
        assert rep.per_node_active[0] == pytest.approx(0.35355, abs=1e-5)
        assert rep.per_node_reactive[0] == pytest.approx(0.35355, abs=1e-5)

    def test_nonresonant_convention_ignores_phase(self):
        rep = power_report(one(0.5, 0.5, math.pi / 2), convention="nonresonant")
        assert rep.per_node_active[0] == pytest.approx(0.5)
        assert rep.total_active_abs == pytest.approx(0.5)

    def test_unknown_convention(self):
        with pytest.raises(DomainError):
            power_report(one(0.5, 0.5, 0.1), convention="other")

    def test_matches_regularizer(self):
        st = make_state(5, 2)
        beta = 2.5
        obj = QuadraticMulti(beta=beta)
        mv, mi = st.masses()
        H, _, _ = obj.parts(mv, mi, st.phi)
        rep = power_report(st)
        assert abs(rep.dissipation_D - (obj.value(st) - H) / beta) < 1e-12


class TestLC:
    @pytest.mark.parametrize("L, C, w, want", [(1, 1, 1, 0.0), (4, 1, 0.5, 0.0), (1, 1, 2, 1.0)])
    def test_check(self, L, C, w, want):
        assert lc_resonance_check(L, C, w) == pytest.approx(want, abs=1e-15)

    def test_check_domain(self):
        with pytest.raises(DomainError):
            lc_resonance_check(0.0, 1.0, 1.0)

    def test_symmetric_node(self):
        L, C = equivalent_lc(one(0.5, 0.5, math.pi / 2), 0, 1.0)
        assert L == pytest.approx(1.0) and C == pytest.approx(1.0)

    def test_voltage_heavy(self):
        L, C = equivalent_lc(one(0.8, 0.2, math.pi / 2), 0, 1.0)
        assert L == pytest.approx(2.0) and C == pytest.approx(0.5)
        assert lc_resonance_check(L, C, 1.0) < 1e-12

    def test_floating_node(self):
        with pytest.raises(NotResonantNode):
            equivalent_lc(one(1.0, 0.0, 0.3), 0, 1.0)
