"""Phasors, per-node state and the normalized network state.

Voltages and currents are stored in Cartesian form as complex arrays. The
squared magnitudes ``|V_i|^2`` and ``|I_i|^2`` ("masses") live on one
probability simplex per subgroup of nodes; the relative phase ``phi_i`` is
kept as its own array because it follows its own relaxation dynamics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, ZeroMass

CONSTRUCTION_TOL = 1e-9


@dataclass(frozen=True)
class Phasor:
    re: float
    im: float

    @classmethod
    def from_polar(cls, magnitude: float, phase: float) -> "Phasor":
        return cls(magnitude * math.cos(phase), magnitude * math.sin(phase))

    @classmethod
    def from_complex(cls, z: complex) -> "Phasor":
        return cls(float(z.real), float(z.imag))

    def __complex__(self) -> complex:
        return complex(self.re, self.im)

    def magnitude2(self) -> float:
        return self.re * self.re + self.im * self.im

    def magnitude(self) -> float:
        return math.hypot(self.re, self.im)

    def phase(self) -> float:
        """Angle in (-pi, pi]; a zero phasor has phase 0."""
        if self.re == 0.0 and self.im == 0.0:
            return 0.0
        a = math.atan2(self.im, self.re)
        return math.pi if a == -math.pi else a


@dataclass(frozen=True)
class NodeState:
    v: Phasor
    i: Phasor
    phi: float

    def mass(self) -> float:
        return self.v.magnitude2() + self.i.magnitude2()


def _as_groups(groups, n: int) -> tuple[np.ndarray, ...]:
    if groups is None:
        return (np.arange(n),)
    out = tuple(np.asarray(g, dtype=np.intp).reshape(-1) for g in groups)
    if not out or any(g.size == 0 for g in out):
        raise DomainError("every subgroup must contain at least one node")
    flat = np.concatenate(out)
    if flat.size != n or not np.array_equal(np.sort(flat), np.arange(n)):
        raise DomainError("groups must partition the node indices exactly once")
    return out


class NetworkState:
    """Complex voltage/current phasors, relative phases and the subgroup partition.

    ``groups`` is a sequence of index arrays partitioning ``range(n)``; ``None``
    means a single global group. With ``check=True`` (the default) the
    constructor enforces the per-subgroup unit-mass constraint to 1e-9.
    """

    __slots__ = ("v", "i", "phi", "groups", "group_index")

    def __init__(self, v, i, phi, groups=None, *, check: bool = True):
        v = np.array(v, dtype=complex).reshape(-1)
        i = np.array(i, dtype=complex).reshape(-1)
        phi = np.array(phi, dtype=float).reshape(-1)
        n = v.size
        if n < 1:
            raise DomainError("a network needs at least one node")
        if i.size != n or phi.size != n:
            raise DomainError("v, i and phi must have the same length")
        self.v = v
        self.i = i
        self.phi = phi
        self.groups = _as_groups(groups, n)
        index = np.empty(n, dtype=np.intp)
        for k, g in enumerate(self.groups):
            index[g] = k
        self.group_index = index
        if check:
            if not (np.all(np.isfinite(v)) and np.all(np.isfinite(i)) and np.all(np.isfinite(phi))):
                raise DomainError("state contains non-finite values")
            if np.any(np.abs(phi) > math.pi):
                raise DomainError("relative phases must satisfy |phi| <= pi")
            res = self.conservation_residual()
            if res > CONSTRUCTION_TOL:
                raise DomainError(f"subgroup mass sums deviate from 1 by {res:.3e}")

    @classmethod
    def from_nodes(cls, nodes: Sequence[NodeState], groups=None, *, check: bool = True):
        return cls(
            [complex(nd.v) for nd in nodes],
            [complex(nd.i) for nd in nodes],
            [nd.phi for nd in nodes],
            groups,
            check=check,
        )

    @classmethod
    def from_masses(cls, mv, mi, phi, groups=None, *, angles=None, check: bool = True):
        """Build a state with voltage angle ``angles`` (default 0) and current at ``angle + phi``."""
        mv = np.asarray(mv, dtype=float)
        mi = np.asarray(mi, dtype=float)
        phi = np.asarray(phi, dtype=float)
        theta = np.zeros_like(mv) if angles is None else np.asarray(angles, dtype=float)
        v = np.sqrt(mv) * np.exp(1j * theta)
        i = np.sqrt(mi) * np.exp(1j * (theta + phi))
        return cls(v, i, phi, groups, check=check)

    def _replace(self, v=None, i=None, phi=None) -> "NetworkState":
        new = object.__new__(NetworkState)
        new.v = self.v if v is None else v
        new.i = self.i if i is None else i
        new.phi = self.phi if phi is None else phi
        new.groups = self.groups
        new.group_index = self.group_index
        return new

    @property
    def n(self) -> int:
        return self.v.size

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    @property
    def nodes(self) -> list[NodeState]:
        return [self.node(k) for k in range(self.n)]

    def node(self, k: int) -> NodeState:
        return NodeState(Phasor.from_complex(self.v[k]), Phasor.from_complex(self.i[k]), float(self.phi[k]))

    def masses(self) -> tuple[np.ndarray, np.ndarray]:
        v, i = self.v, self.i
        return v.real**2 + v.imag**2, i.real**2 + i.imag**2

    def group_sums(self) -> np.ndarray:
        mv, mi = self.masses()
        return np.bincount(self.group_index, weights=mv + mi, minlength=self.n_groups)

    def conservation_residual(self) -> float:
        return float(np.max(np.abs(self.group_sums() - 1.0)))

    def copy(self) -> "NetworkState":
        return self._replace(self.v.copy(), self.i.copy(), self.phi.copy())

    def __repr__(self) -> str:
        return f"NetworkState(n={self.n}, groups={self.n_groups})"


def mass_vector(state: NetworkState) -> np.ndarray:
    """Return an ``(N, 2)`` array of ``(|v_i|^2, |i_i|^2)`` pairs."""
    mv, mi = state.masses()
    return np.column_stack([mv, mi])


def renormalize(state: NetworkState) -> NetworkState:
    """Scale every subgroup so its mass sums to one; phases are untouched."""
    sums = state.group_sums()
    if np.any(~(sums > 0.0)) or not np.all(np.isfinite(sums)):
        bad = int(np.flatnonzero(~(sums > 0.0) | ~np.isfinite(sums))[0])
        raise ZeroMass(f"subgroup {bad} has total mass {sums[bad]!r}")
    # groups already within one ulp of 1 are left alone; rescaling them would
    # only add rounding noise
    scale = np.where(np.abs(sums - 1.0) <= np.finfo(float).eps, 1.0, 1.0 / np.sqrt(sums))
    if np.all(scale == 1.0):
        return state._replace(state.v.copy(), state.i.copy())
    scale = scale[state.group_index]
    return state._replace(state.v * scale, state.i * scale)


def bounded_to_simplex(x: float) -> tuple[float, float]:
    """Split ``x`` in [-1, 1] into ``x_plus - x_minus`` with ``x_plus + x_minus = 1``."""
    if not abs(x) <= 1.0:
        raise DomainError(f"|x| must be <= 1, got {x!r}")
    return (1.0 + x) / 2.0, (1.0 - x) / 2.0


PHASE_EXCLUSION = 1e-3
PHASE_EDGE_EXCLUSION = 0.1


def random_phases(rng, n: int) -> np.ndarray:
    """Relative phases uniform on [-pi, pi] away from the stalling points 0 and +-pi.

    ``phi = 0`` and ``phi = +-pi`` are fixed points of the phase relaxation;
    draws within 1e-3 of zero or 0.1 of +-pi are rejected and redrawn.
    """
    out = np.empty(n)
    for k in range(n):
        while True:
            p = rng.uniform(-math.pi, math.pi)
            if abs(p) > PHASE_EXCLUSION and math.pi - abs(p) > PHASE_EDGE_EXCLUSION:
                out[k] = p
                break
    return out


def random_state(n: int, rng, groups=None, *, masses=None) -> NetworkState:
    """Random feasible state: uniform masses normalized per subgroup, random angles.

    ``masses`` optionally fixes the per-node totals ``|V_i|^2 + |I_i|^2``; the
    split between voltage and current is then drawn uniformly.
    """
    part = _as_groups(groups, n)
    if masses is None:
        raw_v = rng.random(n)
        raw_i = rng.random(n)
        mv, mi = raw_v.copy(), raw_i.copy()
        for g in part:
            s = raw_v[g].sum() + raw_i[g].sum()
            mv[g] /= s
            mi[g] /= s
    else:
        total = np.asarray(masses, dtype=float)
        split = rng.random(n)
        mv, mi = total * split, total * (1.0 - split)
    theta = rng.uniform(-math.pi, math.pi, n)
    phi = random_phases(rng, n)
    state = NetworkState.from_masses(mv, mi, phi, part, angles=theta, check=False)
    return renormalize(state)
