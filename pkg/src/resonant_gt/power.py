"""Electrical read-out of a network state: node powers, dissipation and LC tanks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NotResonantNode

RESONANT = "resonant"
NONRESONANT = "nonresonant"
MAG_FLOOR = 1e-12


@dataclass
class PowerReport:
    per_node_active: np.ndarray
    per_node_reactive: np.ndarray
    total_active_abs: float
    dissipation_D: float
    conservation_residual: float


def power_report(state, convention: str = RESONANT) -> PowerReport:
    """Per-node active ``|V||I| cos phi`` and reactive ``|V||I| sin phi`` metrics.

    With ``convention="nonresonant"`` the active metric ignores the phase and is
    ``|V||I|``, the true dissipation of a network that does not track phase.
    """
    if convention not in (RESONANT, NONRESONANT):
        raise DomainError(f"unknown convention {convention!r}")
    mv, mi = state.masses()
    vi = np.sqrt(mv * mi)
    c = np.cos(state.phi)
    active = vi.copy() if convention == NONRESONANT else vi * c
    return PowerReport(
        per_node_active=active,
        per_node_reactive=vi * np.sin(state.phi),
        total_active_abs=float(np.sum(np.abs(active))),
        dissipation_D=float(np.sum(mv * mi * c * c)),
        conservation_residual=state.conservation_residual(),
    )


def lc_resonance_check(L: float, C: float, omega: float) -> float:
    """``|omega sqrt(LC) - 1|``; zero at resonance."""
    if not (L > 0 and C > 0 and omega > 0):
        raise DomainError("L, C and omega must all be positive")
    return abs(omega * math.sqrt(L * C) - 1.0)


def equivalent_lc(state, i: int, omega: float) -> tuple[float, float]:
    """Inductance and capacitance of an LC tank resonating at ``omega`` with node ``i``'s V/I ratio."""
    if not omega > 0:
        raise DomainError("omega must be positive")
    v = abs(state.v[i])
    c = abs(state.i[i])
    if v < MAG_FLOOR or c < MAG_FLOOR:
        raise NotResonantNode(f"node {i} is floating or shorted (|V|={v:.3g}, |I|={c:.3g})")
    return v / (omega * c), c / (omega * v)
