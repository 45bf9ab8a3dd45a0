"""Reference solvers used to check the growth-transform results.

Nothing here shares code with the solver: the grid search enumerates the
simplex directly, the QP oracle is a projected-gradient method with an exact
projection onto the capped simplex, and the gradient check uses central
differences of the objective value.
"""

from __future__ import annotations

import dataclasses
import math
from itertools import combinations_with_replacement

import numpy as np

from .errors import DomainError, NoConvergence
from .objectives import Objective
from .phasor import NetworkState


def grid_minimize(obj: Objective, n_nodes: int = 1, resolution: int = 200, phase_resolution: int = 181):
    """Exhaustive search over a mass lattice of step ``1/resolution`` times a phase grid.

    The phase grid is ``linspace(-pi, pi, phase_resolution)``. The objective's
    ``H`` and ``Psi`` do not depend on phase, so each mass point is evaluated
    once and the dissipation term is added for the whole phase grid at once.
    Returns ``(state, value)``.
    """
    if n_nodes not in (1, 2):
        raise DomainError("grid search is limited to one or two nodes")
    phases = np.linspace(-math.pi, math.pi, phase_resolution)
    c2 = np.cos(phases) ** 2
    best_val = math.inf
    best = None
    r = int(resolution)
    if n_nodes == 1:
        points = (((k, r - k)) for k in range(r + 1))
    else:
        # compositions of r into 4 parts (mv1, mi1, mv2, mi2)
        points = (
            (a, b - a, c - b, r - c)
            for a, b, c in combinations_with_replacement(range(r + 1), 3)
        )
    for p in points:
        m = np.asarray(p, dtype=float) / r
        mv, mi = m[0::2], m[1::2]
        try:
            H, psi, _ = obj.parts(mv, mi, np.zeros(n_nodes))
        except ArithmeticError:
            continue
        base = H + obj.h * psi
        pv = mv * mi
        if n_nodes == 1:
            grid = base + obj.beta * pv[0] * c2
            j = int(np.argmin(grid))
            val, ph = float(grid[j]), (phases[j],)
        else:
            grid = base + obj.beta * (pv[0] * c2[:, None] + pv[1] * c2[None, :])
            j, k = np.unravel_index(int(np.argmin(grid)), grid.shape)
            val, ph = float(grid[j, k]), (phases[j], phases[k])
        if val < best_val:
            best_val = val
            best = (mv.copy(), mi.copy(), np.array(ph))
    if best is None:
        raise DomainError("objective is undefined on every grid point")
    state = NetworkState.from_masses(*best, check=False)
    return state, best_val


def project_simplex_box(y, upper: float) -> np.ndarray:
    """Euclidean projection of ``y`` onto ``{a : sum a = 1, 0 <= a <= upper}``.

    ``sum clip(y - t, 0, upper)`` is piecewise linear and non-increasing in
    ``t`` with breakpoints at ``y_i - upper`` and ``y_i``; the shift ``t`` that
    makes it equal one is found by one sort and a cumulative sum.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    if n * upper < 1.0 - 1e-15:
        raise DomainError(f"capped simplex is empty: {n} * {upper} < 1")
    b = np.concatenate([y - upper, y])
    d = np.concatenate([-np.ones(n), np.ones(n)])
    order = np.argsort(b, kind="stable")
    b = b[order]
    slope = np.cumsum(d[order])  # slope of the sum on (b[k], b[k+1])
    f = n * upper + np.concatenate([[0.0], np.cumsum(slope[:-1] * np.diff(b))])
    j = int(np.argmax(f <= 1.0))
    if j == 0:
        t = b[0]
    else:
        s = slope[j - 1]
        t = b[j - 1] + (f[j - 1] - 1.0) / (-s) if s < 0 else b[j]
    return np.clip(y - t, 0.0, upper)


def qp_value(K, a) -> float:
    return 0.5 * float(a @ (K @ a))


def kkt_residual(K, a, upper: float) -> float:
    """``|a - P(a - grad)|_inf``; zero exactly at the constrained minimum."""
    return float(np.max(np.abs(a - project_simplex_box(a - K @ a, upper))))


def _polish(K, a, upper, tol):
    # solve the KKT system with the active set read off the current iterate
    n = a.size
    at_top = a >= upper - tol
    free = (a > tol) & ~at_top
    F = np.flatnonzero(free)
    if F.size == 0:
        return None
    rhs_mass = 1.0 - upper * at_top.sum()
    KFF = K[np.ix_(F, F)]
    cross = K[np.ix_(F, np.flatnonzero(at_top))].sum(1) * upper
    m = F.size
    A = np.zeros((m + 1, m + 1))
    A[:m, :m] = KFF
    A[:m, m] = -1.0
    A[m, :m] = 1.0
    rhs = np.concatenate([-cross, [rhs_mass]])
    try:
        sol = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        return None
    out = np.zeros(n)
    out[at_top] = upper
    out[F] = sol[:m]
    if np.any(out < 0) or np.any(out > upper):
        return None
    return out


def projected_gradient_qp(problem=None, *, K=None, upper=None, tol: float = 1e-10, max_iter: int = 500000):
    """Minimize ``0.5 a'Ka`` over the capped simplex (no barrier).

    Fixed step ``1/lambda_max(K)`` projected gradient from the uniform point,
    with the active set polished by an exact linear solve whenever the
    residual stalls. Stops at KKT residual ``< tol``.
    """
    if problem is not None:
        K, upper = problem.gram, problem.upper
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    if n > 2000:
        raise DomainError("reference QP is limited to N <= 2000")
    step = 1.0 / max(np.linalg.eigvalsh(K)[-1], 1e-300)
    a = project_simplex_box(np.full(n, 1.0 / n), upper)
    for it in range(1, max_iter + 1):
        a = project_simplex_box(a - step * (K @ a), upper)
        if it % 50 == 0:
            res = kkt_residual(K, a, upper)
            if res < tol:
                return a
            cand = _polish(K, a, upper, 1e-9)
            if cand is not None and kkt_residual(K, cand, upper) < tol:
                return cand
    raise NoConvergence(f"projected gradient did not reach KKT residual {tol} in {max_iter} iterations")


def finite_diff_check(obj: Objective, state, step: float = 1e-6, detail: bool = False):
    """Largest relative mismatch between analytic partials and central differences.

    The relative error of each partial is ``|analytic - fd| / max(1, |fd|)``.
    With ``detail=True`` also returns ``(kind, node)`` of the worst partial.
    """
    mv, mi = (m.astype(float) for m in state.masses())
    phi = np.array(state.phi, dtype=float)
    gv, gi, gp = obj.gradients(mv, mi, phi)
    worst = 0.0
    where = None
    arrays = {"v2": mv, "i2": mi, "phi": phi}
    analytic = {"v2": gv, "i2": gi, "phi": gp}
    for kind, arr in arrays.items():
        for j in range(arr.size):
            keep = arr[j]
            arr[j] = keep + step
            up = obj.value_arrays(mv, mi, phi)
            arr[j] = keep - step
            dn = obj.value_arrays(mv, mi, phi)
            arr[j] = keep
            fd = (up - dn) / (2.0 * step)
            err = abs(analytic[kind][j] - fd) / max(1.0, abs(fd))
            if err > worst:
                worst, where = err, (kind, j)
    return (worst, where) if detail else worst


@dataclasses.dataclass(frozen=True, eq=False)
class CorruptedObjective(Objective):
    """Wraps an objective and adds ``delta`` to one analytic partial; a negative control."""

    base: Objective = None
    kind: str = "v2"
    node: int = 0
    delta: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "h", self.base.h)
        object.__setattr__(self, "beta", self.base.beta)

    def with_beta(self, beta):
        return dataclasses.replace(self, base=self.base.with_beta(beta), beta=float(beta))

    def parts(self, mv, mi, phi):
        return self.base.parts(mv, mi, phi)

    def value_arrays(self, mv, mi, phi):
        return self.base.value_arrays(mv, mi, phi)

    def gradients(self, mv, mi, phi):
        gv, gi, gp = (np.array(g, dtype=float) for g in self.base.gradients(mv, mi, phi))
        {"v2": gv, "i2": gi, "phi": gp}[self.kind][self.node] += self.delta
        return gv, gi, gp
