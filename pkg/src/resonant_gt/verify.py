"""End-to-end self checks run by ``rgt verify``.

Each suite returns ``(ok, detail)``. Suites are small versions of the test
suite's property checks so the whole run stays well under two minutes.
"""

from __future__ import annotations

import math
import time

import numpy as np

from .dynamics import CONTINUOUS, DISCRETE, SolverConfig, solve
from .objectives import ConstantObjective, QuadraticMulti, QuadraticSingle
from .oracle import (
    CorruptedObjective,
    finite_diff_check,
    grid_minimize,
    kkt_residual,
    project_simplex_box,
    projected_gradient_qp,
)
from .phasor import random_state
from .rng import Xoshiro256
from .schedules import BetaSchedule
from .svm import KernelSpec, OcsvmProblem, build_objective, train

FD_TOL = 1e-6


def _phase_error(phi):
    return np.minimum(np.abs(phi - math.pi / 2), np.abs(phi + math.pi / 2))


def suite_rng():
    r = Xoshiro256(state=(1, 2, 3, 4))
    got = [r.next_u64() for _ in range(4)]
    want = [11520, 0, 1509978240, 1215971899390074240]
    return got == want, f"first outputs {got[:2]}..."


def suite_finite_diff(corrupt: bool = False, states: int = 20):
    rng = Xoshiro256(11)
    worst = 0.0
    X = np.array(rng.normal(20)).reshape(10, 2)
    svm = build_objective(OcsvmProblem(X, 0.1, KernelSpec(1.0)), beta=1.0)
    objs = [(QuadraticSingle(beta=1.0), 1), (QuadraticMulti(beta=0.7), 4), (ConstantObjective(beta=0.5, c=2.0), 3), (svm, 10)]
    if corrupt:
        objs = [(CorruptedObjective(base=o, kind="v2", node=0, delta=1.0), n) for o, n in objs]
    for obj, n in objs:
        for _ in range(states):
            st = random_state(n, rng)
            worst = max(worst, finite_diff_check(obj, st))
    # negative control must be caught
    ctl = CorruptedObjective(base=QuadraticMulti(beta=1.0), kind="phi", node=1, delta=1.0)
    caught = finite_diff_check(ctl, random_state(3, rng)) > FD_TOL
    return worst < FD_TOL and caught, f"max rel error {worst:.2e}, control caught={caught}"


def suite_projection():
    rng = Xoshiro256(5)
    worst = 0.0
    for _ in range(50):
        n = 2 + rng.integers(30)
        y = np.array(rng.normal(n))
        u = (1.0 + rng.random() * 2.0) / n
        a = project_simplex_box(y, u)
        worst = max(worst, abs(a.sum() - 1.0))
        if a.min() < 0 or a.max() > u + 1e-15:
            return False, "projection left the capped simplex"
    return worst < 1e-12, f"max |sum - 1| {worst:.1e}"


def suite_grid():
    obj = QuadraticSingle(beta=1.0)
    _, gval = grid_minimize(obj, 1, 200)
    st = random_state(1, Xoshiro256(3))
    rep = solve(obj, st, SolverConfig(mode=DISCRETE))
    diff = abs(rep.cost - gval)
    return diff < 1e-4 and rep.converged, f"|L_solver - L_grid| = {diff:.1e}"


def suite_descent(runs: int = 20):
    rng = Xoshiro256(21)
    worst = -math.inf
    for k in range(runs):
        n = 1 + rng.integers(6)
        obj = QuadraticMulti(beta=float(rng.uniform(0.0, 3.0)))
        costs = []
        solve(obj, random_state(n, Xoshiro256(k, 1)), SolverConfig(max_steps=300), sink=lambda r: costs.append(r.cost))
        worst = max(worst, float(np.max(np.diff(costs))))
    return worst <= 1e-10, f"largest increase {worst:.1e}"


def suite_subgroups():
    groups = [np.array([0, 1, 2]), np.array([3, 4])]
    st = random_state(5, Xoshiro256(8), groups)
    res = []
    cfg = SolverConfig(mode=CONTINUOUS, omega=[math.pi / 10, math.pi / 6], dt=0.1, max_steps=3000)
    rep = solve(QuadraticMulti(beta=1.0), st, cfg, sink=lambda r: res.append(r.conservation_residual))
    return max(res) < 1e-9 and rep.converged, f"max residual {max(res):.1e}"


def suite_resonance():
    worst_h = worst_d = 0.0
    mnr = math.inf
    for seed in range(10):
        st = random_state(5, Xoshiro256(seed))
        cfg = SolverConfig(omega=math.pi / 10)
        r1 = solve(QuadraticMulti(beta=1.0), st, cfg)
        r0 = solve(QuadraticMulti(beta=0.0), st, cfg)
        mv, mi = r1.state.masses()
        H, _, D = QuadraticMulti().parts(mv, mi, r1.state.phi)
        worst_h, worst_d = max(worst_h, H), max(worst_d, D)
        mv0, mi0 = r0.state.masses()
        mnr = min(mnr, float(np.sum(np.sqrt(mv0 * mi0))))
    ok = worst_h < 1e-6 and worst_d < 1e-6 and mnr > 0.01
    return ok, f"max H {worst_h:.1e}, max D {worst_d:.1e}, min non-resonant dissipation {mnr:.2f}"


def suite_svm_oracle(instances: int = 4):
    worst = 0.0
    for s in range(instances):
        r = Xoshiro256(300 + s)
        n = 5 + r.integers(8)
        X = np.array(r.normal(2 * n)).reshape(n, 2)
        p = OcsvmProblem(X, 0.1, KernelSpec(1.0), h=1e-7)
        a = projected_gradient_qp(p)
        m = train(p, seed=s, beta=1.0)
        Hq = 0.5 * a @ p.gram @ a
        Hs = 0.5 * m.alphas @ p.gram @ m.alphas
        worst = max(worst, abs(Hs - Hq) / Hq)
        if kkt_residual(p.gram, a, p.upper) > 1e-10:
            return False, "oracle did not reach its KKT tolerance"
    return worst < 1e-4, f"max relative H gap {worst:.1e}"


SUITES = {
    "rng_vector": suite_rng,
    "finite_diff_check": suite_finite_diff,
    "simplex_box_projection": suite_projection,
    "grid_minimize": suite_grid,
    "monotone_descent": suite_descent,
    "subgroup_conservation": suite_subgroups,
    "resonance_n5": suite_resonance,
    "svm_vs_qp": suite_svm_oracle,
}


def run_all(corrupt_gradient: bool = False, out=print) -> bool:
    t0 = time.time()
    all_ok = True
    out(f"{'suite':<24} {'status':<6} detail")
    for name, fn in SUITES.items():
        try:
            ok, detail = fn(corrupt=True) if (corrupt_gradient and name == "finite_diff_check") else fn()
        except Exception as exc:  # a crash counts as a failed suite
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        all_ok &= bool(ok)
        out(f"{name:<24} {'PASS' if ok else 'FAIL':<6} {detail}")
    elapsed = time.time() - t0
    if elapsed > 120:
        out(f"warning: verification took {elapsed:.0f} s (budget 120 s)")
    out(f"{'all' :<24} {'PASS' if all_ok else 'FAIL':<6} {elapsed:.1f} s")
    return all_ok
