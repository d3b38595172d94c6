"""Stepsize controllers with safeguards and conservation weights.

Two adaptive rules are implemented on top of a shared controller state:

* projected average (single-valued operators):
  ``t_n = (1 - w_n) t_{n-1} + w_n * clamp(raw, [t_min, t_max])``
* multiplicative (resolvent-only quotients):
  ``t_n = (1 - w_n + w_n * clamp(raw, [k_min, k_max])) * t_{n-1}``

The conservation weights ``w_n in (0, 1]`` are summable with ``w_0 = 1``,
which makes the stepsize sequence convergent with summable increments; the
``verify_summable_increments`` report checks exactly that on a recorded
trace.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .operators import MonotoneOperator, guarded_quotient

import numpy as np

MODE_FIXED = "fixed"
MODE_LIPSCHITZ = "lipschitz"
MODE_ADAPTIVE_SV = "adaptive_single_valued"
MODE_ADAPTIVE_MV = "adaptive_multivalued"


def _clamp(x: float, lo: float, hi: float) -> float:
    return min(max(x, lo), hi)


@dataclass(frozen=True)
class ConservationSchedule:
    """Summable weights w_n in (0, 1] with w_0 = 1.

    ``geometric``: w_n = base ** (n / scale); the total mass has the closed
    form 1 / (1 - r) with r = base ** (1 / scale).  ``explicit`` supplies the
    weights directly (finite runs only).
    """

    kind: str = "geometric"
    base: float = 0.5
    scale: float = 100.0
    weights: Optional[tuple] = None

    def __post_init__(self):
        if self.kind == "geometric":
            if not (0.0 < self.base < 1.0):
                raise ValueError("geometric base must lie in (0, 1)")
            if self.scale <= 0.0:
                raise ValueError("scale exponent must be positive")
        elif self.kind == "explicit":
            ws = self.weights
            if not ws:
                raise ValueError("explicit schedule needs at least one weight")
            if abs(ws[0] - 1.0) > 0.0:
                raise ValueError("w_0 must equal 1")
            if any(not (0.0 < w <= 1.0) for w in ws):
                raise ValueError("weights must lie in (0, 1]")
        else:
            raise ValueError(f"unknown schedule kind {self.kind!r}")

    @classmethod
    def geometric(cls, base: float = 0.5, scale: float = 100.0):
        return cls(kind="geometric", base=base, scale=scale)

    @classmethod
    def explicit(cls, weights: Sequence[float]):
        return cls(kind="explicit", weights=tuple(weights))

    def weight(self, n: int) -> float:
        if self.kind == "geometric":
            return self.base ** (n / self.scale)
        if n >= len(self.weights):
            raise IndexError(
                f"explicit schedule has {len(self.weights)} weights, asked for n={n}"
            )
        return self.weights[n]

    def total(self) -> float:
        """Closed-form (geometric) or exact (explicit) bound on sum of w_n."""
        if self.kind == "geometric":
            r = self.base ** (1.0 / self.scale)
            return 1.0 / (1.0 - r)
        return float(sum(self.weights))


def default_schedule() -> ConservationSchedule:
    """w_n = 2**(-n/100), the default used by all experiments."""
    return ConservationSchedule.geometric(0.5, 100.0)


@dataclass
class StepsizeController:
    """Mutable stepsize state owned by exactly one solver run.

    ``t_current`` always holds the stepsize to use for the next iteration;
    ``update(raw)`` folds a raw quotient into it and advances the counter.
    """

    mode: str
    t_current: float = 1.0
    t_min: float = 1e-4
    t_max: float = 1e4
    kappa_min: float = 1e-2
    kappa_max: float = 1e2
    schedule: ConservationSchedule = field(default_factory=default_schedule)
    n: int = 0

    def __post_init__(self):
        if self.mode not in (MODE_FIXED, MODE_LIPSCHITZ, MODE_ADAPTIVE_SV, MODE_ADAPTIVE_MV):
            raise ValueError(f"unknown stepsize mode {self.mode!r}")
        if self.t_current <= 0.0:
            raise ValueError("stepsize must be positive")
        if not (0.0 < self.t_min < self.t_max):
            raise ValueError("need 0 < t_min < t_max")
        if not (0.0 < self.kappa_min < self.kappa_max):
            raise ValueError("need 0 < kappa_min < kappa_max")

    # -- constructors ------------------------------------------------------

    @classmethod
    def fixed(cls, t: float) -> "StepsizeController":
        return cls(mode=MODE_FIXED, t_current=t)

    @classmethod
    def lipschitz(cls, operator_norm: float) -> "StepsizeController":
        """Constant ``t = 1 / ||B||`` from a precomputed operator norm."""
        if operator_norm <= 0.0:
            raise ValueError("operator norm must be positive")
        return cls(mode=MODE_LIPSCHITZ, t_current=1.0 / operator_norm)

    @classmethod
    def adaptive_single_valued(
        cls,
        t_min: float = 1e-4,
        t_max: float = 1e4,
        schedule: Optional[ConservationSchedule] = None,
        t_start: float = 1.0,
    ) -> "StepsizeController":
        # w_0 = 1 makes the first update overwrite t_start entirely; t_start
        # only feeds resolvent evaluations that happen before any quotient.
        return cls(
            mode=MODE_ADAPTIVE_SV,
            t_current=t_start,
            t_min=t_min,
            t_max=t_max,
            schedule=schedule or default_schedule(),
        )

    @classmethod
    def adaptive_multivalued(
        cls,
        kappa_min: float = 1e-2,
        kappa_max: float = 1e2,
        schedule: Optional[ConservationSchedule] = None,
        t_start: float = 1.0,
    ) -> "StepsizeController":
        return cls(
            mode=MODE_ADAPTIVE_MV,
            t_current=t_start,
            kappa_min=kappa_min,
            kappa_max=kappa_max,
            schedule=schedule or default_schedule(),
        )

    # -- updates -----------------------------------------------------------

    @property
    def adaptive(self) -> bool:
        return self.mode in (MODE_ADAPTIVE_SV, MODE_ADAPTIVE_MV)

    def update(self, raw: float = math.inf) -> float:
        """Fold a raw quotient into the stepsize according to the mode."""
        if self.mode == MODE_ADAPTIVE_SV:
            return self.update_projected_average(raw)
        if self.mode == MODE_ADAPTIVE_MV:
            return self.update_multiplicative(raw)
        self.n += 1
        return self.t_current

    def update_projected_average(self, raw: float) -> float:
        """``t <- (1 - w_n) t + w_n clamp(raw)``; an infinite raw clamps high."""
        if self.mode != MODE_ADAPTIVE_SV:
            raise ValueError("projected-average update needs adaptive_single_valued mode")
        w = self.schedule.weight(self.n)
        r = _clamp(raw, self.t_min, self.t_max)
        self.t_current = (1.0 - w) * self.t_current + w * r
        self.n += 1
        return self.t_current

    def update_multiplicative(self, raw_kappa: float) -> float:
        """``t <- (1 - w_n + w_n clamp(raw_kappa)) * t``."""
        if self.mode != MODE_ADAPTIVE_MV:
            raise ValueError("multiplicative update needs adaptive_multivalued mode")
        w = self.schedule.weight(self.n)
        k = _clamp(raw_kappa, self.kappa_min, self.kappa_max)
        self.t_current = (1.0 - w + w * k) * self.t_current
        self.n += 1
        return self.t_current


# -- raw quotients ---------------------------------------------------------


def raw_quotient_single_valued(B: MonotoneOperator, u: np.ndarray) -> float:
    """``||u|| / ||B u||`` with the denominator guard (-> inf)."""
    bu = B.apply_forward(u)
    return guarded_quotient(float(np.linalg.norm(u)), float(np.linalg.norm(bu)))


def raw_kappa_multivalued(B: MonotoneOperator, t_prev: float, y: np.ndarray) -> float:
    """``||J_{t_prev B} y|| / ||y - J_{t_prev B} y||`` with the guard."""
    u = B.resolvent(t_prev, y)
    return guarded_quotient(
        float(np.linalg.norm(u)), float(np.linalg.norm(y - u))
    )


# -- trace verification ----------------------------------------------------


@dataclass
class IncrementReport:
    passed: bool
    first_violation: Optional[int]
    total_variation: float
    variation_bound: float
    steps: int

    def __bool__(self) -> bool:
        return self.passed


def verify_summable_increments(
    ts: Sequence[float],
    schedule: ConservationSchedule,
    mode: str = MODE_ADAPTIVE_SV,
    lower: float = 1e-4,
    upper: float = 1e4,
) -> IncrementReport:
    """Check a stepsize trace against the conservation-weight increment law.

    ``ts[k]`` must be the controller output of update ``k`` (so the increment
    ``ts[k] - ts[k-1]`` was produced with weight ``w_k``).  In averaged mode
    ``lower/upper`` are the stepsize safeguards and each increment obeys
    ``|dt_k| <= w_k (upper - lower)``; in multiplicative mode they are the
    kappa safeguards and ``|dt_k| <= w_k (upper + 1) t_{k-1}``.  The total
    variation is compared against the schedule's closed-form mass.
    """
    if len(ts) < 2:
        raise ValueError("need at least two stepsizes")
    if mode not in (MODE_ADAPTIVE_SV, MODE_ADAPTIVE_MV):
        raise ValueError("verification applies to the adaptive modes")
    slack = 1e-9
    total = 0.0
    first_violation = None
    for k in range(1, len(ts)):
        dt = abs(ts[k] - ts[k - 1])
        total += dt
        w = schedule.weight(k)
        if mode == MODE_ADAPTIVE_SV:
            bound = w * (upper - lower)
        else:
            bound = w * (upper + 1.0) * ts[k - 1]
        if dt > bound * (1.0 + slack) + 1e-15 and first_violation is None:
            first_violation = k
    if mode == MODE_ADAPTIVE_SV:
        var_bound = (upper - lower) * schedule.total()
    else:
        var_bound = (upper + 1.0) * max(ts) * schedule.total()
    passed = first_violation is None and total <= var_bound * (1.0 + slack)
    return IncrementReport(
        passed=passed,
        first_violation=first_violation,
        total_variation=total,
        variation_bound=var_bound,
        steps=len(ts),
    )
