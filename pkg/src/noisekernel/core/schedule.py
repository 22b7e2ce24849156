"""Noise schedules: sequences of noise levels driving a chain.

A schedule holds T+1 levels beta_t in (0, 1]. Continuous kernels derive
alpha_t = 1 - beta_t. Whether a schedule is usable with a given kernel
depends on the kernel's previous-state weight w:

  continuous:   beta_{t+1} >  w^2 * beta_t   (else step variance would be
                                              negative)
  categorical:  beta_{t+1} >= w  * beta_t    (else the absorbing mixture
                                              weight would be negative)
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, ScheduleValidityError

__all__ = ["NoiseSchedule", "linear_schedule"]


@dataclass(frozen=True)
class NoiseSchedule:
    """Sequence of noise levels beta_t (T+1 values), continuous or categorical."""

    betas: np.ndarray
    kind: str  # "continuous" | "categorical"

    def __post_init__(self):
        betas = np.asarray(self.betas, dtype=np.float64)
        object.__setattr__(self, "betas", betas)
        if self.kind not in ("continuous", "categorical"):
            raise DomainError(f"unknown schedule kind {self.kind!r}")
        if betas.ndim != 1 or betas.size < 1:
            raise DomainError("schedule needs at least one level")
        if np.any(betas <= 0.0) or np.any(betas > 1.0):
            raise DomainError("all levels must satisfy 0 < beta <= 1")

    @property
    def num_steps(self) -> int:
        """Number of transitions T (levels minus one)."""
        return len(self.betas) - 1

    def alphas(self) -> np.ndarray:
        """Signal scales alpha_t = 1 - beta_t (continuous kernels only)."""
        if self.kind != "categorical":
            return 1.0 - self.betas
        raise DomainError("categorical schedules have no alpha")

    def is_annealing(self) -> bool:
        """True when levels are monotone non-increasing."""
        return bool(np.all(np.diff(self.betas) <= 0.0))

    def validate_for_w(self, w: float) -> None:
        """Check every consecutive pair against the kernel validity condition.

        Raises ScheduleValidityError naming the first offending step.
        """
        b = self.betas
        if self.kind == "continuous":
            bad = np.nonzero(b[1:] <= w * w * b[:-1])[0]
            if bad.size:
                t = int(bad[0])
                raise ScheduleValidityError(
                    f"continuous schedule invalid at step t={t}: "
                    f"beta_next={b[t + 1]:.6g} <= w^2*beta_t={w * w * b[t]:.6g}"
                )
        else:
            bad = np.nonzero(b[1:] < w * b[:-1])[0]
            if bad.size:
                t = int(bad[0])
                raise ScheduleValidityError(
                    f"categorical schedule invalid at step t={t}: "
                    f"beta_next={b[t + 1]:.6g} < w*beta_t={w * b[t]:.6g}"
                )


def linear_schedule(beta_start: float, beta_end: float, num_steps: int,
                    kind: str = "continuous") -> NoiseSchedule:
    """Linear annealing grid: T+1 inclusive points from beta_start to beta_end."""
    if num_steps < 1:
        raise DomainError("num_steps must be >= 1")
    betas = np.linspace(float(beta_start), float(beta_end), num_steps + 1)
    return NoiseSchedule(betas=betas, kind=kind)
