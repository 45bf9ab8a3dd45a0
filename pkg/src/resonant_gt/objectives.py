"""Regularized objectives ``L = H + h*Psi + beta*D`` in mass coordinates.

Every objective is evaluated on the arrays ``mv = |V|^2``, ``mi = |I|^2`` and
``phi``. Gradients are taken with respect to those squared magnitudes; the
complex gradient of a phasor factors through them as ``dL/dV = (dL/d|V|^2) V*``.
``H`` and ``Psi`` never depend on ``phi`` for the objectives shipped here, so
the phase gradient comes from the dissipation term alone.
"""

from __future__ import annotations

import dataclasses
from typing import Callable

import numpy as np

from .errors import BarrierViolation, DomainError


def dissipation(mv, mi, phi) -> float:
    """Active-power regularizer ``sum |V|^2 |I|^2 cos^2 phi``."""
    c = np.cos(phi)
    return float(np.sum(mv * mi * c * c))


@dataclasses.dataclass(frozen=True)
class Objective:
    """Base class. Subclasses implement ``_cost`` and ``_mass_grad``.

    ``_cost`` returns ``(H, Psi)`` and ``_mass_grad`` the partials of
    ``H + h*Psi`` with respect to ``mv`` and ``mi``.
    """

    beta: float = 0.0
    h: float = 0.0

    def __post_init__(self):
        if not self.beta >= 0.0:
            raise DomainError(f"beta must be >= 0, got {self.beta!r}")

    def _cost(self, mv, mi):
        raise NotImplementedError

    def _mass_grad(self, mv, mi):
        raise NotImplementedError

    def with_beta(self, beta: float) -> "Objective":
        if not beta >= 0.0:
            raise DomainError(f"beta must be >= 0, got {beta!r}")
        return dataclasses.replace(self, beta=float(beta))

    # array interface used by the solver

    def parts(self, mv, mi, phi) -> tuple[float, float, float]:
        """Return ``(H, Psi, D)`` without weights."""
        H, psi = self._cost(mv, mi)
        return float(H), float(psi), dissipation(mv, mi, phi)

    def value_arrays(self, mv, mi, phi) -> float:
        H, psi, D = self.parts(mv, mi, phi)
        out = H + self.h * psi
        if self.beta:
            out += self.beta * D
        return out

    def gradients(self, mv, mi, phi):
        """Partials ``(dL/dmv, dL/dmi, dL/dphi)`` as arrays."""
        gv, gi = self._mass_grad(mv, mi)
        gv = np.array(gv, dtype=float)
        gi = np.array(gi, dtype=float)
        if self.beta:
            c = np.cos(phi)
            c2 = c * c
            gv += self.beta * mi * c2
            gi += self.beta * mv * c2
            gp = -self.beta * mv * mi * np.sin(2.0 * phi)
        else:
            gp = np.zeros_like(gv)
        return gv, gi, gp

    # state interface

    def value(self, state) -> float:
        mv, mi = state.masses()
        return self.value_arrays(mv, mi, state.phi)

    def grad_v2(self, state, i: int) -> float:
        mv, mi = state.masses()
        return float(self.gradients(mv, mi, state.phi)[0][i])

    def grad_i2(self, state, i: int) -> float:
        mv, mi = state.masses()
        return float(self.gradients(mv, mi, state.phi)[1][i])

    def grad_phi(self, state, i: int) -> float:
        mv, mi = state.masses()
        return float(self.gradients(mv, mi, state.phi)[2][i])


def evaluate(obj: Objective, state) -> float:
    return obj.value(state)


def with_beta(obj: Objective, beta: float) -> Objective:
    return obj.with_beta(beta)


@dataclasses.dataclass(frozen=True)
class BoundedObjective(Objective):
    """Objective of a bounded variable ``x = |V|^2 - |I|^2`` in [-1, 1].

    ``f`` maps the vector ``x`` to ``H`` and ``grad`` to ``dH/dx``.
    """

    f: Callable | None = None
    grad: Callable | None = None

    def _cost(self, mv, mi):
        return self.f(mv - mi), 0.0

    def _mass_grad(self, mv, mi):
        g = np.asarray(self.grad(mv - mi), dtype=float)
        return g, -g


@dataclasses.dataclass(frozen=True)
class QuadraticMulti(Objective):
    """``H = sum_i (|V_i|^2 - |I_i|^2)^2``."""

    n: int | None = None

    def _cost(self, mv, mi):
        x = mv - mi
        return float(np.dot(x, x)), 0.0

    def _mass_grad(self, mv, mi):
        x = 2.0 * (mv - mi)
        return x, -x


@dataclasses.dataclass(frozen=True)
class QuadraticSingle(QuadraticMulti):
    """Single-node case ``H = x^2`` with ``x = |V|^2 - |I|^2``."""

    n: int = 1

    def _cost(self, mv, mi):
        if np.size(mv) != 1:
            raise DomainError("QuadraticSingle is defined on exactly one node")
        return super()._cost(mv, mi)


@dataclasses.dataclass(frozen=True)
class ConstantObjective(Objective):
    c: float = 0.0

    def _cost(self, mv, mi):
        return self.c, 0.0

    def _mass_grad(self, mv, mi):
        z = np.zeros(np.shape(mv))
        return z, z.copy()


@dataclasses.dataclass(frozen=True)
class ProbabilisticObjective(Objective):
    """Objective over probabilities ``alpha_i = |V_i|^2 + |I_i|^2``.

    ``f``/``grad`` give ``H(alpha)`` and its gradient; optional ``psi``/``dpsi``
    give a penalty weighted by ``h``. Both mass partials equal ``dL/dalpha``
    apart from the dissipation term.
    """

    f: Callable | None = None
    grad: Callable | None = None
    psi: Callable | None = None
    dpsi: Callable | None = None

    def _cost(self, mv, mi):
        a = mv + mi
        pen = self.psi(a) if self.psi is not None else 0.0
        return self.f(a), pen

    def _mass_grad(self, mv, mi):
        a = mv + mi
        g = np.array(self.grad(a), dtype=float)
        if self.dpsi is not None and self.h:
            g += self.h * np.asarray(self.dpsi(a))
        return g, g.copy()


def log_barrier(upper: float):
    """Penalty ``-sum log(upper - a)`` and its derivative, guarded against infeasibility."""

    def psi(a):
        gap = upper - a
        if np.any(gap <= 0.0):
            raise BarrierViolation(f"alpha reached the upper bound {upper!r}")
        return float(-np.sum(np.log(gap)))

    def dpsi(a):
        gap = upper - a
        if np.any(gap <= 0.0):
            raise BarrierViolation(f"alpha reached the upper bound {upper!r}")
        return 1.0 / gap

    return psi, dpsi
