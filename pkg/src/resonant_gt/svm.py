"""Resonant one-class SVM trained with the growth-transform solver.

The dual variables are the node masses ``alpha_i = |V_i|^2 + |I_i|^2``. The
box constraint ``alpha_i < 1/(nu N)`` is enforced by a logarithmic barrier of
weight ``h``; the simplex constraint comes for free from the mass encoding.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .dynamics import DISCRETE, SolverConfig, StepReport, solve
from .errors import BarrierViolation, DomainError, ParseError
from .objectives import Objective
from .phasor import NetworkState, random_phases, renormalize
from .rng import Xoshiro256
from .schedules import BetaSchedule

TILE = 2048
PSD_CHECK_MAX = 2000


def _sq_dists(A, B):
    d = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * (A @ B.T)
    return np.maximum(d, 0.0)


@dataclass(frozen=True)
class KernelSpec:
    sigma: float = 1.0
    kind: str = "gaussian"

    def __post_init__(self):
        if self.kind != "gaussian":
            raise DomainError(f"unsupported kernel {self.kind!r}")
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise DomainError(f"kernel sigma must be positive, got {self.sigma!r}")

    def cross(self, A, B) -> np.ndarray:
        """``K(a_i, b_j) = exp(-|a_i - b_j|^2 / (2 sigma^2))``."""
        A = np.atleast_2d(np.asarray(A, dtype=float))
        B = np.atleast_2d(np.asarray(B, dtype=float))
        return np.exp(-_sq_dists(A, B) / (2.0 * self.sigma**2))

    def gram(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        n = X.shape[0]
        if n <= 5000:
            K = self.cross(X, X)
        else:
            K = np.empty((n, n))
            for s in range(0, n, TILE):
                K[s:s + TILE] = self.cross(X[s:s + TILE], X)
        K = 0.5 * (K + K.T)
        np.fill_diagonal(K, 1.0)
        if n <= PSD_CHECK_MAX:
            lo = np.linalg.eigvalsh(K)[0]
            if lo < -1e-8 * np.trace(K):
                raise DomainError(f"Gram matrix is not positive semidefinite (min eigenvalue {lo:.3e})")
        return K

    def to_dict(self) -> dict:
        return {"kind": self.kind, "sigma": format(self.sigma, ".17g")}

    @classmethod
    def from_dict(cls, d) -> "KernelSpec":
        return cls(float(d["sigma"]), d.get("kind", "gaussian"))


def median_sigma(X) -> float:
    """Median pairwise Euclidean distance, a scale-free default kernel width."""
    X = np.asarray(X, dtype=float)
    d = np.sqrt(_sq_dists(X, X))
    iu = np.triu_indices(X.shape[0], 1)
    m = float(np.median(d[iu])) if iu[0].size else 1.0
    return m if m > 0 else 1.0


class OcsvmProblem:
    def __init__(self, data, nu: float, kernel: KernelSpec = KernelSpec(), h: Optional[float] = None):
        X = np.asarray(getattr(data, "x", data), dtype=float)
        if X.ndim != 2 or X.shape[0] < 2:
            raise DomainError("one-class SVM needs at least two points in an N x D matrix")
        if not (0.0 < nu < 1.0):
            raise DomainError(f"nu must lie in (0, 1), got {nu!r}")
        self.x = X
        self.nu = float(nu)
        self.kernel = kernel
        self.h = 1e-3 / X.shape[0] if h is None else float(h)
        if not self.h > 0:
            raise DomainError("barrier weight h must be positive")
        self._gram = None

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def upper(self) -> float:
        return 1.0 / (self.nu * self.n)

    @property
    def gram(self) -> np.ndarray:
        if self._gram is None:
            self._gram = self.kernel.gram(self.x)
        return self._gram

    def fingerprint(self) -> str:
        return dataset_fingerprint(self.x)


def dataset_fingerprint(X) -> str:
    X = np.ascontiguousarray(X, dtype="<f8")
    h = hashlib.sha256()
    h.update(np.asarray(X.shape, dtype="<i8").tobytes())
    h.update(X.tobytes())
    return h.hexdigest()


@dataclass(frozen=True, eq=False)
class OcsvmObjective(Objective):
    """``0.5 a'Ka - h sum log(u - a) + beta D`` with ``a = |V|^2 + |I|^2``."""

    K: np.ndarray = None
    upper: float = 1.0

    def _cost(self, mv, mi):
        a = mv + mi
        gap = self.upper - a
        if np.any(gap <= 0.0):
            raise BarrierViolation(f"alpha reached the upper bound {self.upper!r}")
        return 0.5 * float(a @ (self.K @ a)), float(-np.sum(np.log(gap)))

    def _mass_grad(self, mv, mi):
        a = mv + mi
        gap = self.upper - a
        if np.any(gap <= 0.0):
            raise BarrierViolation(f"alpha reached the upper bound {self.upper!r}")
        g = self.K @ a + self.h / gap
        return g, g.copy()


def build_objective(problem: OcsvmProblem, beta: float = 0.0) -> OcsvmObjective:
    return OcsvmObjective(beta=float(beta), h=problem.h, K=problem.gram, upper=problem.upper)


@dataclass
class OcsvmModel:
    alphas: np.ndarray
    sv_indices: np.ndarray
    rho: float
    kernel: KernelSpec
    x: np.ndarray = field(repr=False)
    nu: float = 0.1
    fingerprint: str = ""
    state: Optional[NetworkState] = field(default=None, repr=False)
    report: Optional[StepReport] = field(default=None, repr=False)

    def scores(self, X) -> np.ndarray:
        """``sum_j alpha_j K(x_j, x)`` for each row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty(X.shape[0])
        for s in range(0, X.shape[0], TILE):
            out[s:s + TILE] = self.kernel.cross(X[s:s + TILE], self.x) @ self.alphas
        return out


def sv_threshold(n: int) -> float:
    return 1.0 / (10.0 * n)


def initial_state(problem: OcsvmProblem, rng) -> NetworkState:
    """Uniform ``alpha_i = 1/N`` split at random between voltage and current."""
    n = problem.n
    a = np.full(n, 1.0 / n)
    split = rng.random(n)
    theta = rng.uniform(-math.pi, math.pi, n)
    phi = random_phases(rng, n)
    st = NetworkState.from_masses(a * split, a * (1.0 - split), phi, angles=theta, check=False)
    return renormalize(st)


def default_config(**kw) -> SolverConfig:
    base = dict(mode=DISCRETE, omega=math.pi / 4, tol_cost=1e-12, max_steps=200000, dt=1e-4, lambda_margin=0.1)
    base.update(kw)
    return SolverConfig(**base)


def model_from_state(problem: OcsvmProblem, state: NetworkState, report=None) -> OcsvmModel:
    mv, mi = state.masses()
    alphas = mv + mi
    sv = np.flatnonzero(alphas > sv_threshold(problem.n))
    sc = problem.gram @ alphas
    rho = float(np.median(sc[sv])) if sv.size else float(np.median(sc))
    return OcsvmModel(
        alphas=alphas,
        sv_indices=sv,
        rho=rho,
        kernel=problem.kernel,
        x=problem.x,
        nu=problem.nu,
        fingerprint=problem.fingerprint(),
        state=state,
        report=report,
    )


def train(problem: OcsvmProblem, config: Optional[SolverConfig] = None,
          schedule: Optional[BetaSchedule] = None, seed: int = 0, sink=None,
          beta: float = 1.0, stream: int = 0, strict: bool = False) -> OcsvmModel:
    """Train from a seeded random start. ``schedule`` defaults to constant ``beta`` from t = 0."""
    config = config or default_config()
    if schedule is None:
        schedule = BetaSchedule.constant(beta, start_time=0.0)
    rng = Xoshiro256(seed, stream)
    state = initial_state(problem, rng)
    obj = build_objective(problem, schedule.beta_at(0.0))
    rep = solve(obj, state, config, schedule, sink=sink, strict=strict)
    return model_from_state(problem, rep.state, rep)


def decision_function(model: OcsvmModel, x) -> np.ndarray | float:
    """``f(x) = sum_j alpha_j K(x_j, x) - rho``; non-negative inside the learned region."""
    X = np.asarray(x, dtype=float)
    f = model.scores(X) - model.rho
    return float(f[0]) if X.ndim == 1 else f


def classify_dataset(model: OcsvmModel, data=None) -> tuple[int, int, int]:
    """``(correct, outliers, sv_count)`` on ``data`` (the training set by default)."""
    X = model.x if data is None else np.asarray(getattr(data, "x", data), dtype=float)
    f = decision_function(model, X)
    f = np.atleast_1d(f)
    outliers = int(np.sum(f < 0))
    return X.shape[0] - outliers, outliers, int(model.sv_indices.size)


def decision_grid(model: OcsvmModel, resolution: int = 100, pad: float = 0.25):
    """Regular grid over the 2-D data bounding box; returns ``(xx, yy, f)`` flattened."""
    if model.x.shape[1] != 2:
        raise DomainError("decision grid needs two-dimensional data")
    lo = model.x.min(0)
    hi = model.x.max(0)
    span = hi - lo
    lo = lo - pad * span
    hi = hi + pad * span
    gx = np.linspace(lo[0], hi[0], resolution)
    gy = np.linspace(lo[1], hi[1], resolution)
    xx, yy = np.meshgrid(gx, gy)
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    return pts[:, 0], pts[:, 1], decision_function(model, pts)


def _fmt(v) -> str:
    return format(float(v), ".17g")


def save_model(model: OcsvmModel, path) -> None:
    doc = {
        "format": "resonant-ocsvm/1",
        "kernel": model.kernel.to_dict(),
        "nu": _fmt(model.nu),
        "rho": _fmt(model.rho),
        "alphas": [_fmt(a) for a in model.alphas],
        "sv_indices": [int(i) for i in model.sv_indices],
        "dataset_fingerprint": model.fingerprint,
        "n": int(model.x.shape[0]),
        "d": int(model.x.shape[1]),
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_model(path, data) -> OcsvmModel:
    """Read a model written by ``save_model``; ``data`` must be the training set it was fit on."""
    try:
        doc = json.loads(Path(path).read_text())
        alphas = np.array([float(s) for s in doc["alphas"]])
        rho = float(doc["rho"])
        nu = float(doc["nu"])
        kernel = KernelSpec.from_dict(doc["kernel"])
        sv = np.asarray(doc["sv_indices"], dtype=np.intp)
        fp = doc["dataset_fingerprint"]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"cannot read model: {exc}", path=path) from None
    X = np.asarray(getattr(data, "x", data), dtype=float)
    if dataset_fingerprint(X) != fp:
        raise DomainError("dataset fingerprint does not match the stored model")
    return OcsvmModel(alphas=alphas, sv_indices=sv, rho=rho, kernel=kernel, x=X, nu=nu, fingerprint=fp)


def retrain_with(problem: OcsvmProblem, **kw) -> OcsvmProblem:
    """Copy of ``problem`` with ``nu``, ``kernel`` or ``h`` replaced (the cached Gram matrix is reused when possible)."""
    nu = kw.get("nu", problem.nu)
    kernel = kw.get("kernel", problem.kernel)
    h = kw.get("h", problem.h)
    out = OcsvmProblem(problem.x, nu, kernel, h)
    if kernel == problem.kernel:
        out._gram = problem._gram
    return out


__all__ = [
    "KernelSpec",
    "OcsvmProblem",
    "OcsvmObjective",
    "OcsvmModel",
    "build_objective",
    "train",
    "decision_function",
    "classify_dataset",
    "decision_grid",
    "save_model",
    "load_model",
    "median_sigma",
    "sv_threshold",
]
