"""Douglas-Rachford iterations: stationary forms, the non-stationary
scheme with the multiplicative stepsize, the operator-graph ("pairs")
form, a generic solve loop and per-iteration trace recording.

Iteration forms
---------------
``u``      iterates the main sequence directly; needs a single-valued B:
           ``u+ = J_{tB}( J_{tA}(u - t Bu) + t Bu )``.
``y``      shadow-sequence form for arbitrary maximal monotone pairs:
           ``u = J_{tB} y;  y+ = y + J_{tA}(2u - y) - u`` (stationary t).
``nonstationary``
           the y-form corrected for a varying stepsize via the quotient
           ``kappa = ||u|| / ||u - y||`` and the multiplicative controller.
``pairs``  iterates graph pairs (u, b) with b in B(u) and explicit
           selections a in A(v); works for any stepsize sequence and is
           the form the convergence guarantees are stated for.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import IncompatibleForm
from .operators import MonotoneOperator, guarded_quotient
from .stepsize import (
    MODE_ADAPTIVE_MV,
    MODE_ADAPTIVE_SV,
    MODE_FIXED,
    MODE_LIPSCHITZ,
    StepsizeController,
)

FORM_U = "u"
FORM_Y = "y"
FORM_NONSTATIONARY = "nonstationary"
FORM_PAIRS = "pairs"
FORMS = (FORM_U, FORM_Y, FORM_NONSTATIONARY, FORM_PAIRS)

STATUS_CONVERGED = "converged"
STATUS_MAX_ITERS = "max_iters"

CRITERION_FIXED_POINT = "fixed_point"
CRITERION_LINEAR_RESIDUAL = "linear_residual"


@dataclass
class DRState:
    """Full per-iteration variable set of the pairs form.

    ``b`` is a selection in B(u) and ``a`` in A(v); ``y = u + t b`` is the
    shadow point with ``J_{tB} y = u``.
    """

    u: np.ndarray
    b: np.ndarray
    t: float
    n: int
    y: Optional[np.ndarray] = None
    v: Optional[np.ndarray] = None
    a: Optional[np.ndarray] = None


@dataclass
class StopRule:
    max_iters: int = 100_000
    tol: float = 1e-8
    criterion: str = CRITERION_FIXED_POINT

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.criterion not in (CRITERION_FIXED_POINT, CRITERION_LINEAR_RESIDUAL):
            raise ValueError(f"unknown stop criterion {self.criterion!r}")


class SolveTrace:
    """Per-iteration record: columns are plain Python lists of floats.

    Row k holds iteration k+1: the stepsize used, the effective multiplier
    (nan outside the multiplicative forms), the fixed-point residual
    ``||u^{n-1} - v^n||``, the linear residual ``||(A+B)u||`` (nan when an
    operator has no forward map), the objective value (nan when no objective
    callable was supplied) and a wall-clock timestamp delta in ns.
    """

    columns = ("n", "t", "kappa", "fp_residual", "lin_residual", "objective", "wall_ns")

    def __init__(self):
        self.n: List[int] = []
        self.t: List[float] = []
        self.kappa: List[float] = []
        self.fp_residual: List[float] = []
        self.lin_residual: List[float] = []
        self.objective: List[float] = []
        self.wall_ns: List[int] = []

    def append(self, n, t, kappa, fp, lin, obj, wall):
        self.n.append(n)
        self.t.append(t)
        self.kappa.append(kappa)
        self.fp_residual.append(fp)
        self.lin_residual.append(lin)
        self.objective.append(obj)
        self.wall_ns.append(wall)

    def __len__(self):
        return len(self.n)

    def rows(self):
        for i in range(len(self.n)):
            yield (
                self.n[i],
                self.t[i],
                self.kappa[i],
                self.fp_residual[i],
                self.lin_residual[i],
                self.objective[i],
                self.wall_ns[i],
            )


@dataclass
class DRResult:
    solution: np.ndarray
    status: str
    iterations: int
    trace: SolveTrace
    states: Optional[List[DRState]] = None


# -- single steps ------------------------------------------------------------


def dr_step_u(
    A: MonotoneOperator, B: MonotoneOperator, t: float, u: np.ndarray
) -> np.ndarray:
    """One step of the u-form; B must be single-valued."""
    bu = B.apply_forward(u)
    v = A.resolvent(t, u - t * bu)
    return B.resolvent(t, v + t * bu)


def dr_step_y(
    A: MonotoneOperator, B: MonotoneOperator, t: float, y: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """One step of the y-form; returns (y_next, u) with u = J_{tB} y."""
    u = B.resolvent(t, y)
    v = A.resolvent(t, 2.0 * u - y)
    return y + v - u, u


def _nonstationary_step(A, B, ctrl, y, t_prev):
    u = B.resolvent(t_prev, y)
    raw = guarded_quotient(
        float(np.linalg.norm(u)), float(np.linalg.norm(u - y))
    )
    t_new = ctrl.update(raw)
    kappa = t_new / t_prev
    v = A.resolvent(t_new, (1.0 + kappa) * u - kappa * y)
    y_next = v + kappa * (y - u)
    return y_next, u, v, kappa, t_new


def dr_step_nonstationary(
    A: MonotoneOperator,
    B: MonotoneOperator,
    ctrl: StepsizeController,
    y: np.ndarray,
    t_prev: float,
) -> Tuple[np.ndarray, np.ndarray, float, float]:
    """One step of the non-stationary scheme.

    ``u = J_{t_prev B} y`` and the raw quotient ``||u||/||u - y||`` feed the
    controller; the returned ``kappa`` is the safeguarded multiplier that was
    actually applied, i.e. ``t_new / t_prev``.
    """
    y_next, u, _v, kappa, t_new = _nonstationary_step(A, B, ctrl, y, t_prev)
    return y_next, u, kappa, t_new


def dr_step_pairs(
    A: MonotoneOperator,
    B: MonotoneOperator,
    t: float,
    u_prev: np.ndarray,
    b_prev: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """One step of the pairs form; needs ``b_prev in B(u_prev)``.

    Returns (u, v, a, b) satisfying ``v + t a = u_prev - t b_prev`` and
    ``u + t b = v + t b_prev`` by construction.
    """
    w = u_prev - t * b_prev
    v = A.resolvent(t, w)
    a = (w - v) / t
    z = v + t * b_prev
    u = B.resolvent(t, z)
    b = (z - u) / t
    return u, v, a, b


def initial_pair(
    B: MonotoneOperator, x0: np.ndarray, t0: float
) -> Tuple[np.ndarray, np.ndarray]:
    """Starting pair (u0, b0) with b0 in B(u0).

    Single-valued B: (x0, B x0).  Otherwise one resolvent evaluation,
    u0 = J_{t0 B}(x0) and b0 = (x0 - u0)/t0, which lies in B(u0) by the
    resolvent definition.
    """
    if B.single_valued:
        return np.asarray(x0, dtype=float), B.apply_forward(x0)
    u0 = B.resolvent(t0, x0)
    return u0, (x0 - u0) / t0


# -- solve loop ---------------------------------------------------------------


def _check_compat(A, B, ctrl, stop, form):
    if form not in FORMS:
        raise IncompatibleForm(f"unknown form {form!r}")
    if A.dim != B.dim:
        raise IncompatibleForm("operator dimensions differ")
    if form == FORM_U:
        if not B.single_valued:
            raise IncompatibleForm("form 'u' needs a single-valued B")
        if ctrl.mode == MODE_ADAPTIVE_MV:
            raise IncompatibleForm(
                "form 'u' takes fixed, lipschitz or adaptive_single_valued stepsizes"
            )
    elif form == FORM_Y:
        if ctrl.mode not in (MODE_FIXED, MODE_LIPSCHITZ):
            raise IncompatibleForm(
                "form 'y' is the stationary form; use 'nonstationary' or 'pairs' to adapt"
            )
    elif form == FORM_NONSTATIONARY:
        if ctrl.mode != MODE_ADAPTIVE_MV:
            raise IncompatibleForm(
                "form 'nonstationary' needs an adaptive_multivalued controller"
            )
    if stop.criterion == CRITERION_LINEAR_RESIDUAL and not (
        A.single_valued and B.single_valued
    ):
        raise IncompatibleForm(
            "linear_residual stopping needs forward maps on both operators"
        )


def solve_dr(
    A: MonotoneOperator,
    B: MonotoneOperator,
    ctrl: StepsizeController,
    stop: StopRule,
    form: str,
    x0: np.ndarray,
    objective: Optional[Callable[[np.ndarray], float]] = None,
    record_states: bool = False,
) -> DRResult:
    """Iterate one of the DR forms until the stop rule fires.

    The returned solution is the u-iterate for every form.  ``record_states``
    keeps the full (u, b) pair per iteration (pairs/nonstationary forms only),
    which the quasi-Fejer monitor consumes.
    """
    _check_compat(A, B, ctrl, stop, form)
    x0 = np.asarray(x0, dtype=float)
    trace = SolveTrace()
    states: Optional[List[DRState]] = [] if record_states else None
    lin_ok = A.single_valued and B.single_valued

    def lin_res(u):
        if not lin_ok:
            return math.nan
        return float(np.linalg.norm(A.apply_forward(u) + B.apply_forward(u)))

    def obj_val(u):
        return float(objective(u)) if objective is not None else math.nan

    start = time.perf_counter_ns()
    status = STATUS_MAX_ITERS
    iterations = 0

    if form == FORM_U:
        u = x0
        for k in range(stop.max_iters):
            if ctrl.mode == MODE_ADAPTIVE_SV:
                bu = B.apply_forward(u)
                raw = guarded_quotient(
                    float(np.linalg.norm(u)), float(np.linalg.norm(bu))
                )
                t = ctrl.update(raw)
            else:
                t = ctrl.update()
                bu = B.apply_forward(u)
            v = A.resolvent(t, u - t * bu)
            u_next = B.resolvent(t, v + t * bu)
            fp = float(np.linalg.norm(u - v))
            u = u_next
            iterations = k + 1
            lr = lin_res(u)
            trace.append(iterations, t, math.nan, fp, lr, obj_val(u),
                         time.perf_counter_ns() - start)
            if _stopped(stop, fp, lr, u):
                status = STATUS_CONVERGED
                break
        solution = u

    elif form == FORM_Y:
        y = x0
        u = None
        for k in range(stop.max_iters):
            t = ctrl.update()
            y_next, u = dr_step_y(A, B, t, y)
            fp = float(np.linalg.norm(y_next - y))
            y = y_next
            iterations = k + 1
            lr = lin_res(u) if lin_ok else math.nan
            trace.append(iterations, t, math.nan, fp, lr, obj_val(u),
                         time.perf_counter_ns() - start)
            if _stopped(stop, fp, lr, u):
                status = STATUS_CONVERGED
                break
        solution = u if u is not None else B.resolvent(ctrl.t_current, y)

    elif form == FORM_NONSTATIONARY:
        y = x0
        u = None
        for k in range(stop.max_iters):
            t_prev = ctrl.t_current
            y_old = y
            y, u, v, kappa, t = _nonstationary_step(A, B, ctrl, y, t_prev)
            fp = float(np.linalg.norm(u - v))
            iterations = k + 1
            lr = lin_res(u) if lin_ok else math.nan
            trace.append(iterations, t, kappa, fp, lr, obj_val(u),
                         time.perf_counter_ns() - start)
            if states is not None:
                b = (y_old - u) / t_prev
                w = (1.0 + kappa) * u - kappa * y_old
                states.append(
                    DRState(u=u, b=b, t=t, n=iterations, y=y_old, v=v, a=(w - v) / t)
                )
            if _stopped(stop, fp, lr, u):
                status = STATUS_CONVERGED
                break
        solution = u if u is not None else B.resolvent(ctrl.t_current, y)

    else:  # FORM_PAIRS
        t0 = ctrl.t_current
        u, b = initial_pair(B, x0, t0)
        if states is not None:
            states.append(DRState(u=u, b=b, t=t0, n=0, y=u + t0 * b))
        for k in range(stop.max_iters):
            t_prev = ctrl.t_current
            if ctrl.mode == MODE_ADAPTIVE_SV:
                raw = guarded_quotient(
                    float(np.linalg.norm(u)), float(np.linalg.norm(b))
                )
                t = ctrl.update(raw)
            elif ctrl.mode == MODE_ADAPTIVE_MV:
                raw = guarded_quotient(
                    float(np.linalg.norm(u)), t_prev * float(np.linalg.norm(b))
                )
                t = ctrl.update(raw)
            else:
                t = ctrl.update()
            u_next, v, a, b_next = dr_step_pairs(A, B, t, u, b)
            fp = float(np.linalg.norm(u - v))
            kappa = t / t_prev if ctrl.mode == MODE_ADAPTIVE_MV else math.nan
            u, b = u_next, b_next
            iterations = k + 1
            lr = lin_res(u)
            trace.append(iterations, t, kappa, fp, lr, obj_val(u),
                         time.perf_counter_ns() - start)
            if states is not None:
                states.append(
                    DRState(u=u, b=b, t=t, n=iterations, y=u + t * b, v=v, a=a)
                )
            if _stopped(stop, fp, lr, u):
                status = STATUS_CONVERGED
                break
        solution = u

    return DRResult(
        solution=solution,
        status=status,
        iterations=iterations,
        trace=trace,
        states=states,
    )


def _stopped(stop: StopRule, fp: float, lin: float, u: np.ndarray) -> bool:
    if stop.criterion == CRITERION_FIXED_POINT:
        return fp <= stop.tol * (1.0 + float(np.linalg.norm(u)))
    return lin <= stop.tol


# -- quasi-Fejer monitoring ---------------------------------------------------


@dataclass
class FejerReport:
    passed: bool
    violations: List[int]
    total_slack: float
    distances: List[float]

    def __bool__(self) -> bool:
        return self.passed


def fejer_monitor(
    states: Sequence[DRState],
    reference: Tuple[np.ndarray, np.ndarray],
    t_limit: float,
    rel_slack: float = 1e-9,
) -> FejerReport:
    """Check quasi-Fejer monotonicity towards an extended-solution pair.

    With d_n = ||u^n - u*||^2 + t_limit^2 ||b^n - b*||^2 the run must satisfy

        d_n <= d_{n-1} + |t_n^2 - t_limit^2| * |beta_{n-1} - beta_n|

    per step (beta_n = ||b^n - b*||^2), up to a relative numerical slack.
    For a stationary run at t = t_limit the slack term vanishes and d_n must
    be nonincreasing.
    """
    if len(states) < 2:
        raise ValueError("need at least the initial state and one step")
    u_star, b_star = (np.asarray(reference[0], float), np.asarray(reference[1], float))
    alphas = [float(np.linalg.norm(s.u - u_star) ** 2) for s in states]
    betas = [float(np.linalg.norm(s.b - b_star) ** 2) for s in states]
    tl2 = t_limit**2
    d = [a + tl2 * bb for a, bb in zip(alphas, betas)]
    violations = []
    total_slack = 0.0
    for n in range(1, len(states)):
        slack = abs(states[n].t ** 2 - tl2) * abs(betas[n - 1] - betas[n])
        total_slack += slack
        allowed = d[n - 1] + slack + rel_slack * (1.0 + d[n - 1])
        if d[n] > allowed:
            violations.append(n)
    return FejerReport(
        passed=not violations,
        violations=violations,
        total_slack=total_slack,
        distances=d,
    )
