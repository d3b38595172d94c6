"""Alternating direction method of multipliers for

    min  phi(u) + psi(v)   s.t.  D u + E v = c

with the adaptive penalty derived from the non-stationary DR scheme on the
dual inclusion, plus vanilla and residual-balancing baselines and the exact
step-by-step correspondence check against DR on the dual problem.

Sign conventions: ``w`` is the unscaled dual variable updated as
``w+ = w - t (D u+ + E v+ - c)``; the adaptive rule averages the projected
quotient ``||w+|| / ||E v+||`` with the conservation weights.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np

from .operators import MonotoneOperator, guarded_quotient
from .stepsize import ConservationSchedule, StepsizeController

STATUS_CONVERGED = "converged"
STATUS_MAX_ITERS = "max_iters"

METHOD_ADAPTIVE = "adaptive"
METHOD_VANILLA = "vanilla"
METHOD_RB = "rb"
METHODS = (METHOD_ADAPTIVE, METHOD_VANILLA, METHOD_RB)


@dataclass(frozen=True)
class SplitProblem:
    """Two-block split problem data and its subproblem oracles.

    ``phi_prox(t, r)`` returns ``argmin_u phi(u) + (t/2)||D u - r||^2`` and
    ``psi_prox(t, r)`` returns ``argmin_v psi(v) + (t/2)||E v - r||^2``.
    """

    phi_prox: Callable[[float, np.ndarray], np.ndarray]
    psi_prox: Callable[[float, np.ndarray], np.ndarray]
    D: np.ndarray
    E: np.ndarray
    c: np.ndarray
    objective: Callable[[np.ndarray, np.ndarray], float]
    dim_u: int
    dim_v: int


@dataclass
class AdmmState:
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    t: float
    n: int = 0


def initial_admm_state(
    p: SplitProblem, t_start: float = 1.0, rng: Optional[np.random.Generator] = None
) -> AdmmState:
    """Zero start, or a seeded random (v, w) start when an rng is given."""
    m = p.c.size
    if rng is None:
        v = np.zeros(p.dim_v)
        w = np.zeros(m)
    else:
        v = rng.standard_normal(p.dim_v)
        w = rng.standard_normal(m)
    return AdmmState(u=np.zeros(p.dim_u), v=v, w=w, t=t_start, n=0)


def _admm_core(p: SplitProblem, st: AdmmState):
    t = st.t
    u = p.phi_prox(t, p.c - p.E @ st.v + st.w / t)
    v = p.psi_prox(t, p.c - p.D @ u + st.w / t)
    Ev = p.E @ v
    w = st.w - t * (p.D @ u + Ev - p.c)
    return u, v, w, Ev


def admm_step_adaptive(
    p: SplitProblem, st: AdmmState, ctrl: StepsizeController
) -> AdmmState:
    """One sweep (u, v, w) at the current t, then the averaged t update.

    The controller must be in adaptive_single_valued mode; the raw quotient
    is ``||w+|| / ||E v+||`` with the denominator guard mapping to the upper
    safeguard.
    """
    u, v, w, Ev = _admm_core(p, st)
    raw = guarded_quotient(float(np.linalg.norm(w)), float(np.linalg.norm(Ev)))
    t_new = ctrl.update_projected_average(raw)
    return AdmmState(u=u, v=v, w=w, t=t_new, n=st.n + 1)


def admm_step_vanilla(p: SplitProblem, st: AdmmState) -> AdmmState:
    """One sweep with the penalty left untouched."""
    u, v, w, _ = _admm_core(p, st)
    return AdmmState(u=u, v=v, w=w, t=st.t, n=st.n + 1)


def admm_step_rb(
    p: SplitProblem,
    st: AdmmState,
    mu: float = 10.0,
    tau_inc: float = 2.0,
    tau_dec: float = 2.0,
) -> AdmmState:
    """Vanilla sweep followed by residual balancing of the penalty."""
    u, v, w, Ev = _admm_core(p, st)
    r_primal = float(np.linalg.norm(p.D @ u + Ev - p.c))
    r_dual = st.t * float(np.linalg.norm(p.D.T @ (p.E @ (v - st.v))))
    t = st.t
    if r_primal > mu * r_dual:
        t = t * tau_inc
    elif r_dual > mu * r_primal:
        t = t / tau_dec
    return AdmmState(u=u, v=v, w=w, t=t, n=st.n + 1)


class AdmmTrace:
    """Per-iteration record (n, t, r_primal, r_dual, objective, wall_ns)."""

    columns = ("n", "t", "r_primal", "r_dual", "objective", "wall_ns")

    def __init__(self):
        self.n: List[int] = []
        self.t: List[float] = []
        self.r_primal: List[float] = []
        self.r_dual: List[float] = []
        self.objective: List[float] = []
        self.wall_ns: List[int] = []

    def append(self, n, t, rp, rd, obj, wall):
        self.n.append(n)
        self.t.append(t)
        self.r_primal.append(rp)
        self.r_dual.append(rd)
        self.objective.append(obj)
        self.wall_ns.append(wall)

    def __len__(self):
        return len(self.n)

    def rows(self):
        for i in range(len(self.n)):
            yield (self.n[i], self.t[i], self.r_primal[i], self.r_dual[i],
                   self.objective[i], self.wall_ns[i])


@dataclass
class AdmmResult:
    state: AdmmState
    status: str
    iterations: int
    trace: AdmmTrace


def solve_admm(
    p: SplitProblem,
    method: str = METHOD_ADAPTIVE,
    t_start: float = 1.0,
    ctrl: Optional[StepsizeController] = None,
    tol: float = 1e-6,
    max_iters: int = 10_000,
    mu: float = 10.0,
    tau_inc: float = 2.0,
    tau_dec: float = 2.0,
    state0: Optional[AdmmState] = None,
    track_objective: bool = False,
) -> AdmmResult:
    """Run one ADMM variant until both residual norms fall below tol.

    Stopping: ``max(||Du + Ev - c||, t ||D^T E (v - v_prev)||) <= tol``.
    """
    if method not in METHODS:
        raise ValueError(f"unknown ADMM method {method!r}")
    if method == METHOD_ADAPTIVE and ctrl is None:
        ctrl = StepsizeController.adaptive_single_valued(t_start=t_start)
    st = state0 if state0 is not None else initial_admm_state(p, t_start)
    trace = AdmmTrace()
    start = time.perf_counter_ns()
    status = STATUS_MAX_ITERS
    iterations = 0
    for _ in range(max_iters):
        v_prev = st.v
        t_used = st.t
        if method == METHOD_ADAPTIVE:
            st = admm_step_adaptive(p, st, ctrl)
        elif method == METHOD_VANILLA:
            st = admm_step_vanilla(p, st)
        else:
            st = admm_step_rb(p, st, mu=mu, tau_inc=tau_inc, tau_dec=tau_dec)
        iterations = st.n
        r_primal = float(np.linalg.norm(p.D @ st.u + p.E @ st.v - p.c))
        r_dual = t_used * float(np.linalg.norm(p.D.T @ (p.E @ (st.v - v_prev))))
        obj = float(p.objective(st.u, st.v)) if track_objective else math.nan
        trace.append(iterations, st.t, r_primal, r_dual, obj,
                     time.perf_counter_ns() - start)
        if max(r_primal, r_dual) <= tol:
            status = STATUS_CONVERGED
            break
    return AdmmResult(state=st, status=status, iterations=iterations, trace=trace)


# -- DR on the dual problem ---------------------------------------------------


def dual_operator_pair(p: SplitProblem) -> Tuple[MonotoneOperator, MonotoneOperator]:
    """The dual-inclusion operators, exposed through their resolvents.

    The dual of the split problem is a monotone inclusion in the multiplier
    variable; both resolvents reduce to one subproblem-oracle call plus an
    affine correction:

        J_{tA}(s) = s - t (D phi_prox(t, c + s/t) - c)
        J_{tB}(s) = s - t  E psi_prox(t, s/t)
    """
    m = p.c.size

    def resolvent_a(t, s):
        u = p.phi_prox(t, p.c + s / t)
        return s - t * (p.D @ u - p.c)

    def resolvent_b(t, s):
        v = p.psi_prox(t, s / t)
        return s - t * (p.E @ v)

    return (
        MonotoneOperator(dim=m, resolvent=resolvent_a, label="dual_first_block"),
        MonotoneOperator(dim=m, resolvent=resolvent_b, label="dual_second_block"),
    )


@dataclass
class CorrespondenceReport:
    passed: bool
    first_divergence: Optional[int]
    max_w_error: float
    max_t_error: float
    steps: int

    def __bool__(self) -> bool:
        return self.passed


def dual_correspondence_check(
    p: SplitProblem,
    n_steps: int = 50,
    seed: int = 0,
    tol: float = 1e-8,
    t_start: float = 1.0,
    t_min: float = 1e-4,
    t_max: float = 1e4,
    schedule: Optional[ConservationSchedule] = None,
    y0: Optional[np.ndarray] = None,
) -> CorrespondenceReport:
    """Run adaptive ADMM and non-stationary DR on the dual side by side.

    Both runs start from the same seeded (v0, w0); the DR shadow point is
    initialized as ``y0 = w0 - t0 (D u1 - c)`` (its derived value), so the
    DR u-iterates must reproduce the ADMM multipliers w^n and the two
    stepsize sequences must coincide.  Passing an explicit ``y0`` overrides
    the derived value (useful as a mismatch control).

    Requires a single-valued second dual block along the run, which holds
    for strongly convex psi.
    """
    rng = np.random.default_rng(seed)
    st = initial_admm_state(p, t_start, rng=rng)
    v0, w0 = st.v.copy(), st.w.copy()

    sched = schedule or None
    ctrl_admm = StepsizeController.adaptive_single_valued(
        t_min=t_min, t_max=t_max, schedule=sched, t_start=t_start
    )
    admm_w, admm_t = [], []
    for _ in range(n_steps):
        st = admm_step_adaptive(p, st, ctrl_admm)
        admm_w.append(st.w.copy())
        admm_t.append(st.t)

    res_a, res_b = (op.resolvent for op in dual_operator_pair(p))
    if y0 is None:
        u1 = p.phi_prox(t_start, p.c - p.E @ v0 + w0 / t_start)
        y = w0 - t_start * (p.D @ u1 - p.c)
    else:
        y = np.asarray(y0, dtype=float)

    ctrl_dr = StepsizeController.adaptive_single_valued(
        t_min=t_min, t_max=t_max, schedule=sched, t_start=t_start
    )
    dr_w, dr_t = [], []
    t_prev = t_start
    for _ in range(n_steps):
        u = res_b(t_prev, y)
        # same quotient as ||w+||/||Ev+||: the denominator ||y-u||/t_prev
        # equals ||E v+|| by the resolvent construction
        raw = guarded_quotient(
            float(np.linalg.norm(u)), float(np.linalg.norm(y - u)) / t_prev
        )
        t_new = ctrl_dr.update_projected_average(raw)
        kappa = t_new / t_prev
        v = res_a(t_new, (1.0 + kappa) * u - kappa * y)
        y = v + kappa * (y - u)
        dr_w.append(u)
        dr_t.append(t_new)
        t_prev = t_new

    first_divergence = None
    max_w_err = 0.0
    max_t_err = 0.0
    for k in range(n_steps):
        w_err = float(np.linalg.norm(admm_w[k] - dr_w[k]))
        t_err = abs(admm_t[k] - dr_t[k])
        max_w_err = max(max_w_err, w_err)
        max_t_err = max(max_t_err, t_err)
        bad = w_err > tol * (1.0 + float(np.linalg.norm(admm_w[k]))) or (
            t_err > tol * (1.0 + admm_t[k])
        )
        if bad and first_divergence is None:
            first_divergence = k + 1
    return CorrespondenceReport(
        passed=first_divergence is None,
        first_divergence=first_divergence,
        max_w_error=max_w_err,
        max_t_error=max_t_err,
        steps=n_steps,
    )
