"""Time schedules for the dissipation weight beta(t)."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import ConfigError

KINDS = ("constant", "logistic", "switching")


@dataclass(frozen=True)
class BetaSchedule:
    """``constant``: beta0 (stored as ``beta_max``) once ``t >= start_time``, else 0.
    ``logistic``: ``beta_min + (beta_max - beta_min) / (1 + exp(-k (t + t0)))``.
    ``switching``: ``beta_min`` before ``t_switch``, ``beta_max`` from then on.
    """

    kind: str = "constant"
    beta_min: float = 0.0
    beta_max: float = 1.0
    k: float = 20.0
    t0: float = -0.5
    t_switch: float = 0.3
    start_time: float = 0.1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError("schedule.kind", f"expected one of {KINDS}, got {self.kind!r}")
        if not 0.0 <= self.beta_min <= self.beta_max or not math.isfinite(self.beta_max):
            raise ConfigError("schedule.beta_min", "need 0 <= beta_min <= beta_max < inf")
        if self.kind == "logistic" and not (self.k > 0 and math.isfinite(self.k)):
            raise ConfigError("schedule.k", f"steepness must be positive, got {self.k!r}")

    @classmethod
    def constant(cls, beta: float, start_time: float = 0.1) -> "BetaSchedule":
        return cls("constant", 0.0, float(beta), start_time=start_time)

    @classmethod
    def logistic(cls, beta_min=0.0, beta_max=1.0, k=20.0, t0=None, t_end=1.0, start_time=0.1):
        """Default midpoint ``t0 = -t_end/2`` puts the sigmoid centre halfway through the run."""
        if t0 is None:
            t0 = -0.5 * t_end
        return cls("logistic", float(beta_min), float(beta_max), float(k), float(t0), start_time=start_time)

    @classmethod
    def switching(cls, beta_min=0.0, beta_max=1.0, t_switch=0.3, start_time=0.1):
        return cls("switching", float(beta_min), float(beta_max), t_switch=float(t_switch), start_time=start_time)

    def beta_at(self, t: float) -> float:
        if self.kind == "constant":
            return self.beta_max if t >= self.start_time else 0.0
        if self.kind == "switching":
            return self.beta_max if t >= self.t_switch else self.beta_min
        z = -self.k * (t + self.t0)
        if z > 700.0:
            return self.beta_min
        span = self.beta_max - self.beta_min
        b = self.beta_min + span / (1.0 + math.exp(z))
        return min(max(b, self.beta_min), self.beta_max)

    def settle_time(self, rtol: float = 1e-12) -> float:
        """Earliest time after which beta stays within ``rtol * beta_max`` of its final value."""
        if self.kind == "constant":
            return self.start_time
        if self.kind == "switching":
            return self.t_switch
        span = self.beta_max - self.beta_min
        if span == 0.0:
            return 0.0
        # span/(1+e^z) >= span - eps  <=>  e^z <= span/(span - eps) - 1
        eps = rtol * max(self.beta_max, 1.0)
        if eps >= span:
            return 0.0
        bound = math.log(eps / (span - eps))
        return max(0.0, -bound / self.k - self.t0)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "BetaSchedule":
        allowed = set(cls.__dataclass_fields__)
        extra = set(d) - allowed
        if extra:
            raise ConfigError("schedule." + sorted(extra)[0], "unknown field")
        try:
            kw = {key: (str(v) if key == "kind" else float(v)) for key, v in d.items()}
        except (TypeError, ValueError) as exc:
            raise ConfigError("schedule", str(exc)) from None
        return cls(**kw)


def beta_at(schedule: BetaSchedule, t: float) -> float:
    return schedule.beta_at(t)
