import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from resonant_gt.dynamics import SolverConfig, discrete_step, solve
from resonant_gt.objectives import (
    BoundedObjective,
    ProbabilisticObjective,
    QuadraticMulti,
    dissipation,
    log_barrier,
)
from resonant_gt.oracle import finite_diff_check, project_simplex_box
from resonant_gt.phasor import NetworkState, Phasor, bounded_to_simplex, random_state, renormalize
from resonant_gt.power import equivalent_lc, lc_resonance_check, power_report
from resonant_gt.rng import Xoshiro256
from resonant_gt.schedules import BetaSchedule
from resonant_gt.svm import KernelSpec, OcsvmProblem, build_objective

seeds = st.integers(0, 2**63)
sizes = st.integers(1, 6)
betas = st.floats(0.0, 3.0)


def partition(n, seed):
    # random split of range(n) into one or two subgroups
    r = Xoshiro256(seed, 7)
    if n < 2 or r.random() < 0.5:
        return None
    cut = 1 + r.integers(n - 1)
    return [list(range(cut)), list(range(cut, n))]


def objectives(n, beta, seed):
    r = Xoshiro256(seed, 3)
    c = np.asarray(r.uniform(-0.5, 0.5, n))
    psi, dpsi = log_barrier(1.5)
    yield QuadraticMulti(beta=beta)
    yield BoundedObjective(f=lambda x: float(np.sum((x - c) ** 2) + np.sum(x**4)),
                           grad=lambda x: 2 * (x - c) + 4 * x**3, beta=beta)
    yield ProbabilisticObjective(f=lambda a: float(np.sum(c * a) + a @ a), grad=lambda a: c + 2 * a,
                                 psi=psi, dpsi=dpsi, h=0.01, beta=beta)


@given(st.floats(-1.0, 1.0))
def test_bounded_split_identity(x):
    p, m = bounded_to_simplex(x)
    assert p >= 0 and m >= 0
    eps = np.finfo(float).eps
    assert abs((p - m) - x) <= eps and abs(p + m - 1) <= eps


@given(st.floats(1e-30, 1e6), st.floats(-math.pi, math.pi, exclude_min=True))
def test_phasor_round_trip(mag, ph):
    p = Phasor.from_polar(mag, ph)
    assert abs(p.magnitude() - mag) <= 1e-12 * mag
    assert abs(p.phase() - ph) <= 1e-12


@given(sizes, seeds, st.floats(0.01, 100.0))
def test_renormalize_to_one_ulp(n, seed, scale):
    s = random_state(n, Xoshiro256(seed), partition(n, seed))
    raw = s._replace(s.v * math.sqrt(scale), s.i * math.sqrt(scale))
    out = renormalize(raw)
    assert np.all(np.abs(out.group_sums() - 1.0) <= 2 * np.finfo(float).eps)
    np.testing.assert_allclose(out.phi, s.phi)


@given(sizes, seeds)
def test_random_state_feasible(n, seed):
    s = random_state(n, Xoshiro256(seed), partition(n, seed))
    assert s.conservation_residual() < 1e-9
    assert np.all(np.abs(s.phi) <= math.pi)


@given(sizes, seeds, betas)
def test_gradients_match_differences(n, seed, beta):
    s = random_state(n, Xoshiro256(seed))
    for obj in objectives(n, beta, seed):
        value = abs(obj.value(s))
        assert finite_diff_check(obj, s) < max(1e-6, 1e-4 * value)


@given(sizes, seeds, st.floats(0.0, 1.0))
def test_quadratic_convex_in_masses(n, seed, t):
    a = random_state(n, Xoshiro256(seed, 1))
    b = random_state(n, Xoshiro256(seed, 2))
    obj = QuadraticMulti(beta=0.0)
    ma, mb = np.concatenate(a.masses()), np.concatenate(b.masses())
    mix = t * ma + (1 - t) * mb
    h = lambda m: obj.parts(m[:n], m[n:], np.zeros(n))[0]
    assert h(mix) <= t * h(ma) + (1 - t) * h(mb) + 1e-12


@given(sizes, seeds)
def test_dissipation_nonnegative_and_zero_in_quadrature(n, seed):
    s = random_state(n, Xoshiro256(seed))
    mv, mi = s.masses()
    assert dissipation(mv, mi, s.phi) >= 0
    signs = np.where(np.asarray(Xoshiro256(seed).random(n)) < 0.5, -1.0, 1.0)
    assert dissipation(mv, mi, signs * math.pi / 2) < 1e-30


@settings(max_examples=25)
@given(sizes, seeds, betas)
def test_descent_and_conservation(n, seed, beta):
    groups = partition(n, seed)
    s = random_state(n, Xoshiro256(seed), groups)
    omega = [0.3, 0.7] if groups else 0.3
    for obj in objectives(n, beta, seed):
        costs, res = [], []

        def sink(r):
            costs.append(r.cost)
            res.append(r.conservation_residual)

        solve(obj, s, SolverConfig(omega=omega, max_steps=150), sink=sink)
        assert np.max(np.diff(costs), initial=-1.0) <= 1e-10
        assert max(res) < 1e-9


@given(sizes, seeds, betas)
def test_raw_update_on_simplex(n, seed, beta):
    groups = partition(n, seed)
    s = random_state(n, Xoshiro256(seed), groups)
    cfg = SolverConfig(omega=[0.1, 0.2] if groups else 0.1)
    for obj in objectives(n, beta, seed):
        assert discrete_step(obj, s, cfg).raw_residual < 1e-12


schedules = st.one_of(
    st.builds(BetaSchedule.constant, st.floats(0, 10), st.floats(0, 1)),
    st.builds(lambda lo, span, k, t0: BetaSchedule.logistic(lo, lo + span, k, t0),
              st.floats(0, 5), st.floats(0, 5), st.floats(0.1, 50), st.floats(-2, 0)),
    st.builds(lambda lo, span, ts: BetaSchedule.switching(lo, lo + span, ts),
              st.floats(0, 5), st.floats(0, 5), st.floats(0, 2)),
)


@given(schedules, st.lists(st.floats(0, 10), min_size=2, max_size=20))
def test_schedule_monotone_and_bounded(sched, times):
    times = sorted(times)
    vals = [sched.beta_at(t) for t in times]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    lo = 0.0 if sched.kind == "constant" else sched.beta_min
    assert all(lo <= v <= sched.beta_max for v in vals)


@given(sizes, seeds)
def test_power_bounds(n, seed):
    s = random_state(n, Xoshiro256(seed))
    rep = power_report(s)
    vi = np.abs(s.v) * np.abs(s.i)
    assert rep.dissipation_D >= 0
    assert np.all(np.abs(rep.per_node_active) <= vi + 1e-16)
    for k in range(n):
        L, C = equivalent_lc(s, k, 0.9)
        assert lc_resonance_check(L, C, 0.9) < 1e-12


@given(st.integers(2, 30), seeds, st.floats(1.0, 4.0))
def test_projection_feasible_and_nearest(n, seed, slack):
    r = Xoshiro256(seed)
    y = np.asarray(r.normal(n)) * 3
    u = slack / n
    a = project_simplex_box(y, u)
    assert abs(a.sum() - 1) < 1e-12 and a.min() >= 0 and a.max() <= u
    np.testing.assert_allclose(project_simplex_box(a, u), a, atol=1e-14)
    for _ in range(5):
        z = project_simplex_box(np.asarray(r.normal(n)), u)
        assert np.linalg.norm(y - a) <= np.linalg.norm(y - z) + 1e-12


@settings(max_examples=10)
@given(st.integers(3, 10), seeds)
def test_svm_gradients(n, seed):
    X = np.asarray(Xoshiro256(seed).normal(2 * n)).reshape(n, 2)
    obj = build_objective(OcsvmProblem(X, 0.5, KernelSpec(1.0)), beta=1.0)
    s = random_state(n, Xoshiro256(seed, 1), masses=np.full(n, 1.0 / n))
    assert finite_diff_check(obj, s) < 1e-6
