"""Growth-transform solver: discrete Baum-Eagon updates, the continuous phasor
flow and the relative-phase relaxation.

Both modes share one update skeleton. For every node the mass multipliers are

    sigma_V^2 = (lam - dL/dmv) / eta_k,   sigma_I^2 = (lam - dL/dmi) / eta_k,

with ``eta_k`` the mass-weighted sum of the shifted gradients over the node's
subgroup, so every subgroup stays on its simplex. Discrete mode scales the
phasors by ``sigma``; continuous mode takes one step of
``dV/dt = j w sigma V - (1 - sigma) V`` with the rotation applied exactly.
The current phasor always rotates with its voltage plus the phase increment,
so ``angle(I) - angle(V)`` tracks ``phi``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    BarrierViolation,
    ConfigError,
    DegenerateEta,
    MaxStepsExceeded,
    NonFiniteGradient,
)
from .phasor import NetworkState, renormalize
from .schedules import BetaSchedule

PI = math.pi
DISCRETE = "discrete"
CONTINUOUS = "continuous"
ACCEPT_SLACK = 1e-13


@dataclass
class SolverConfig:
    """Solver settings.

    ``tau="adaptive"`` scales each node's phase time constant with its
    dissipation weight, ``tau_i = 1.5 pi beta |V_i|^2 |I_i|^2 / (lam * phase_rate)``,
    which makes the linearized phase contraction ``dt * phase_rate`` per step
    regardless of how much mass the node carries. A number or per-node array
    gives fixed time constants instead. Discrete mode relaxes the phase with a
    unit step; ``dt`` there only sets the time axis and the bookkeeping rotation.
    """

    omega: object = PI / 10
    mode: str = DISCRETE
    lambda_margin: float = 1.0
    tau: object = "adaptive"
    phase_rate: float = 0.5
    dt: float = 0.1
    max_steps: int = 20000
    tol_cost: float = 1e-10
    patience: int = 10
    rotate: bool = True
    backtrack: bool = True
    max_backtracks: int = 60
    dissipation_tol: float = 1e-3
    decrease_fraction: float = 0.1
    global_phase_rate: float = 0.0
    v_phase_rates: object = None
    i_phase_rates: object = None

    def omega_array(self, n_groups: int) -> np.ndarray:
        w = np.atleast_1d(np.asarray(self.omega, dtype=float))
        if w.size == 1:
            w = np.full(n_groups, w[0])
        if w.size != n_groups:
            raise ConfigError("solver.omega", f"need {n_groups} frequencies, got {w.size}")
        return w

    def validate(self, n_groups: int = 1) -> "SolverConfig":
        if self.mode not in (DISCRETE, CONTINUOUS):
            raise ConfigError("solver.mode", f"unknown mode {self.mode!r}")
        w = self.omega_array(n_groups)
        for name in ("lambda_margin", "dt", "phase_rate"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"solver.{name}", f"must be a positive finite number, got {v!r}")
        if not np.all(np.isfinite(w)):
            raise ConfigError("solver.omega", "frequencies must be finite")
        if self.mode == CONTINUOUS:
            if np.any(np.abs(w) * self.dt >= 0.1):
                raise ConfigError("solver.dt", "continuous mode needs dt * omega < 0.1")
            if self.dt > 1.0:
                raise ConfigError("solver.dt", "continuous mode needs dt <= 1")
        if not isinstance(self.tau, str):
            t = np.asarray(self.tau, dtype=float)
            if np.any(~(t > 0)) or not np.all(np.isfinite(t)):
                raise ConfigError("solver.tau", "time constants must be positive and finite")
        elif self.tau != "adaptive":
            raise ConfigError("solver.tau", f"expected 'adaptive' or a number, got {self.tau!r}")
        if not 0.0 <= self.decrease_fraction < 1.0:
            raise ConfigError("solver.decrease_fraction", "must lie in [0, 1)")
        if int(self.max_steps) < 1 or int(self.patience) < 1:
            raise ConfigError("solver.max_steps", "max_steps and patience must be >= 1")
        return self

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for key in ("omega", "tau", "v_phase_rates", "i_phase_rates"):
            if isinstance(d[key], np.ndarray):
                d[key] = d[key].tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError("solver." + sorted(extra)[0], "unknown field")
        try:
            cfg = cls(**d)
        except TypeError as exc:
            raise ConfigError("solver", str(exc)) from None
        return cfg


@dataclass(frozen=True)
class LambdaPolicy:
    margin: float = 1.0

    def __post_init__(self):
        if not self.margin > 0:
            raise ConfigError("solver.lambda_margin", "margin must be positive")


@dataclass
class StepReport:
    state: NetworkState
    cost: float
    cost_before: float
    dissipation: float
    sigma_min: float
    sigma_max: float
    lambda_used: float
    step_index: int = 0
    time: float = 0.0
    beta: float = 0.0
    boost: float = 1.0
    backtracks: int = 0
    raw_residual: float = 0.0
    converged: bool = False
    zero_mass_nodes: tuple = ()
    parts: tuple = field(default=(), repr=False)


@dataclass
class TraceRecord:
    step: int
    t: float
    beta: float
    H: float
    D: float
    total_active_abs: float
    conservation_residual: float
    cost: float
    v_abs: np.ndarray = field(repr=False, default=None)
    i_abs: np.ndarray = field(repr=False, default=None)
    phi: np.ndarray = field(repr=False, default=None)


# building blocks


def _lambda_base(gv, gi, gp) -> float:
    base = max(0.0, float(np.max(gv)), float(np.max(gi)), float(np.max(np.abs(gp))))
    if not math.isfinite(base) or not (np.all(np.isfinite(gv)) and np.all(np.isfinite(gi))):
        raise NonFiniteGradient("objective gradient is not finite")
    return base


def compute_lambda(obj, state: NetworkState, policy: LambdaPolicy = LambdaPolicy()) -> float:
    """``max(0, largest mass gradient, largest |dL/dphi|) + margin``."""
    mv, mi = state.masses()
    gv, gi, gp = obj.gradients(mv, mi, state.phi)
    return _lambda_base(gv, gi, gp) + policy.margin


def _sigma2(mv, mi, gv, gi, lam, group_index, n_groups):
    sv = lam - gv
    si = lam - gi
    eta = np.bincount(group_index, weights=mv * sv + mi * si, minlength=n_groups)
    if np.any(~(eta > 0.0)):
        raise DegenerateEta(f"growth-transform normalizer is not positive: {eta.min()!r}")
    e = eta[group_index]
    return sv / e, si / e


def _stationarity(mv, mi, gv, gi, group_index, n_groups):
    # mass-weighted spread of the gradient around its subgroup mean; zero at a
    # fixed point of the growth transform
    mean = np.bincount(group_index, weights=mv * gv + mi * gi, minlength=n_groups)[group_index]
    return float(np.sum(mv * (gv - mean) ** 2 + mi * (gi - mean) ** 2))


def sigma(obj, state: NetworkState, i: int, lam: float) -> tuple[float, float]:
    """Mass multipliers ``(sigma_V, sigma_I)`` of node ``i``."""
    mv, mi = state.masses()
    gv, gi, _ = obj.gradients(mv, mi, state.phi)
    s2v, s2i = _sigma2(mv, mi, gv, gi, lam, state.group_index, state.n_groups)
    return math.sqrt(s2v[i]), math.sqrt(s2i[i])


def g_phi(phi, grad_phi, lam):
    """Phase target ``pi (lam phi - pi G) / (lam pi - phi G)``."""
    return PI * (lam * phi - PI * grad_phi) / (lam * PI - phi * grad_phi)


def _phase_drive(phi, gp, lam):
    # g_phi - phi in closed form; avoids cancellation near the target
    return -gp * (PI * PI - phi * phi) / (lam * PI - phi * gp)


def _phase_delta(mv, mi, phi, gp, lam, beta, config: SolverConfig, dt: float):
    if isinstance(config.tau, str):
        if not beta:
            return np.zeros_like(phi)
        # dt/tau * drive with tau = 1.5 pi beta mv mi / (lam rate); the mass
        # factor cancels against gp = -beta mv mi sin(2 phi)
        s = np.sin(2.0 * phi)
        return dt * config.phase_rate * lam * s * (PI * PI - phi * phi) / (1.5 * PI * (lam * PI - phi * gp))
    tau = np.asarray(config.tau, dtype=float)
    return (dt / tau) * _phase_drive(phi, gp, lam)


def phase_step(obj, state: NetworkState, i: int, config: SolverConfig, lam: Optional[float] = None) -> float:
    """New relative phase of node ``i`` after one relaxation step, clamped to [-pi, pi]."""
    mv, mi = state.masses()
    gv, gi, gp = obj.gradients(mv, mi, state.phi)
    if lam is None:
        lam = _lambda_base(gv, gi, gp) + config.lambda_margin
    dt = config.dt if config.mode == CONTINUOUS else 1.0
    d = _phase_delta(mv, mi, state.phi, gp, lam, obj.beta, config, dt)
    return float(np.clip(state.phi[i] + d[i], -PI, PI))


def _rates(config: SolverConfig, n: int):
    rv = np.zeros(n) if config.v_phase_rates is None else np.broadcast_to(np.asarray(config.v_phase_rates, float), (n,))
    ri = np.zeros(n) if config.i_phase_rates is None else np.broadcast_to(np.asarray(config.i_phase_rates, float), (n,))
    return rv, ri


def _safe_parts(obj, mv, mi, phi):
    try:
        H, psi, D = obj.parts(mv, mi, phi)
    except BarrierViolation:
        return math.inf, None
    v = H + obj.h * psi + obj.beta * D
    return (v, (H, psi, D)) if math.isfinite(v) else (math.inf, None)


def _advance(obj, state: NetworkState, config: SolverConfig, continuous: bool,
             lam=None, boost: float = 1.0, step_index: int = 0, time: float = 0.0,
             cost_before: Optional[float] = None) -> StepReport:
    mv, mi = state.masses()
    phi = state.phi
    gv, gi, gp = obj.gradients(mv, mi, phi)
    base = _lambda_base(gv, gi, gp)
    L0 = obj.value_arrays(mv, mi, phi) if cost_before is None else cost_before
    margin = config.lambda_margin
    lam = base + margin * boost if lam is None else float(lam)
    dt = config.dt
    dt_phase = dt if continuous else 1.0
    n = state.n
    gidx, ng = state.group_index, state.n_groups
    omega = config.omega_array(ng)[gidx]
    rv, ri = _rates(config, n)

    spread = _stationarity(mv, mi, gv, gi, gidx, ng) * config.decrease_fraction * (dt if continuous else 1.0)
    backtracks = 0
    stalled = False
    while True:
        s2v, s2i = _sigma2(mv, mi, gv, gi, lam, gidx, ng)
        sv, si = np.sqrt(s2v), np.sqrt(s2i)
        if continuous:
            fv = 1.0 - (1.0 - sv) * dt
            fi = 1.0 - (1.0 - si) * dt
        else:
            fv, fi = sv, si
        new_phi = np.clip(phi + _phase_delta(mv, mi, phi, gp, lam, obj.beta, config, dt_phase), -PI, PI)
        L1, parts = _safe_parts(obj, mv * fv * fv, mi * fi * fi, new_phi)
        # first-order decrease of the mass update is spread / lam; a step that
        # only swaps mass back and forth gets rejected and lam grows
        if not config.backtrack or L1 <= L0 - spread / lam + ACCEPT_SLACK:
            break
        if backtracks >= config.max_backtracks:
            # no admissible step at any lambda tried; stay put
            fv = fi = sv = si = np.ones(n)
            new_phi = phi
            L1, parts = _safe_parts(obj, mv, mi, phi)
            stalled = True
            break
        lam = base + 2.0 * max(lam - base, margin)
        backtracks += 1
    if parts is None:
        raise BarrierViolation("update left the barrier domain")

    if stalled:
        boost = 1.0
    elif backtracks:
        boost = (lam - base) / margin
    else:
        boost = max(1.0, 0.8 * (lam - base) / margin)

    dphi = new_phi - phi
    if continuous:
        theta_v = (omega * sv + config.global_phase_rate + rv) * dt
    else:
        theta_v = ((omega if config.rotate else 0.0) + config.global_phase_rate + rv) * dt
    theta_i = theta_v + dphi + (ri - rv) * dt
    v = state.v * (fv * np.exp(1j * theta_v))
    i = state.i * (fi * np.exp(1j * theta_i))
    raw = state._replace(v, i, new_phi)
    raw_res = raw.conservation_residual()
    # renormalizing moves the masses by a few ulps, so the trial cost stands
    return StepReport(
        state=renormalize(raw),
        cost=L1,
        cost_before=L0,
        dissipation=parts[2],
        sigma_min=float(min(sv.min(), si.min())),
        sigma_max=float(max(sv.max(), si.max())),
        lambda_used=float(lam),
        step_index=step_index,
        time=time,
        beta=obj.beta,
        boost=boost,
        backtracks=backtracks,
        raw_residual=raw_res,
        parts=parts,
    )


def discrete_step(obj, state: NetworkState, config: SolverConfig, lam=None, boost: float = 1.0, **kw) -> StepReport:
    """One Baum-Eagon update. With ``lam`` given that value is tried first."""
    return _advance(obj, state, config, False, lam, boost, **kw)


def continuous_step(obj, state: NetworkState, config: SolverConfig, lam=None, boost: float = 1.0, **kw) -> StepReport:
    """One integration step of the phasor flow of length ``config.dt``."""
    return _advance(obj, state, config, True, lam, boost, **kw)


def total_active_abs(mv, mi, phi) -> float:
    return float(np.sum(np.sqrt(mv * mi) * np.abs(np.cos(phi))))


def make_record(obj, state: NetworkState, step: int, t: float, beta: float, full: bool = True,
                parts=None) -> TraceRecord:
    mv, mi = state.masses()
    H, psi, D = obj.parts(mv, mi, state.phi) if parts is None else parts
    rec = TraceRecord(
        step=step,
        t=t,
        beta=beta,
        H=H,
        D=D,
        total_active_abs=total_active_abs(mv, mi, state.phi),
        conservation_residual=state.conservation_residual(),
        cost=H + obj.h * psi + beta * D,
    )
    if full:
        rec.v_abs = np.sqrt(mv)
        rec.i_abs = np.sqrt(mi)
        rec.phi = state.phi.copy()
    return rec


def solve(obj, initial: NetworkState, config: SolverConfig, schedule: Optional[BetaSchedule] = None,
          sink: Optional[Callable[[TraceRecord], None]] = None, strict: bool = False) -> StepReport:
    """Iterate until ``|dL| < tol_cost`` (at fixed beta) for ``patience`` steps.

    Convergence also requires the schedule to have settled and, when beta > 0,
    the total active power to be below ``dissipation_tol``. Without a schedule
    the objective's own beta is used from t = 0. On hitting ``max_steps`` the
    last report is returned with ``converged=False`` (or raised with
    ``strict=True``).
    """
    config.validate(initial.n_groups)
    if schedule is None:
        schedule = BetaSchedule.constant(obj.beta, start_time=0.0)
    continuous = config.mode == CONTINUOUS
    dt = config.dt
    settle = schedule.settle_time()
    state = initial
    beta = schedule.beta_at(0.0)
    cur = obj.with_beta(beta)
    if sink is not None:
        sink(make_record(cur, state, 0, 0.0, beta))
    boost = 1.0
    calm = 0
    rep = None
    cost = None
    for k in range(1, int(config.max_steps) + 1):
        t_prev = (k - 1) * dt
        beta = schedule.beta_at(t_prev)
        if beta != cur.beta:
            cur = obj.with_beta(beta)
            cost = None
        rep = _advance(cur, state, config, continuous, None, boost, step_index=k, time=k * dt, cost_before=cost)
        boost = rep.boost
        state = rep.state
        cost = rep.cost
        if sink is not None:
            sink(make_record(cur, state, k, k * dt, beta, parts=rep.parts))
        calm = calm + 1 if abs(rep.cost - rep.cost_before) < config.tol_cost else 0
        if calm >= config.patience and t_prev >= settle:
            if beta == 0.0 or total_active_abs(*state.masses(), state.phi) < config.dissipation_tol:
                rep.converged = True
                break
    if rep is None:
        raise MaxStepsExceeded("no steps taken")
    mv, mi = state.masses()
    rep.zero_mass_nodes = tuple(int(j) for j in np.flatnonzero(mv + mi == 0.0))
    if not rep.converged and strict:
        raise MaxStepsExceeded(f"no convergence within {config.max_steps} steps", report=rep)
    return rep


def apply_global_phase(config: SolverConfig, rate: float) -> SolverConfig:
    """Add a common angular rate to every voltage and current phasor."""
    return dataclasses.replace(config, global_phase_rate=config.global_phase_rate + float(rate))


def apply_relative_phase(config: SolverConfig, v_rates, i_rates) -> SolverConfig:
    """Add independent per-node angular rates to the voltage and current phasors."""
    return dataclasses.replace(
        config,
        v_phase_rates=np.asarray(v_rates, dtype=float),
        i_phase_rates=np.asarray(i_rates, dtype=float),
    )
