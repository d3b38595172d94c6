"""Linear-case spectral toolkit.

For linear monotone A, B the u-form iteration is driven by the matrix

    H(t) = (I + tA + tB + t^2 AB)^{-1} (I + t^2 AB)

and the y-form by F(t) = J_{tA}(2 J_{tB} - I) - J_{tB} + I, which is similar
to H(t) via conjugation with (I + tB).  Every eigenvalue of H(t) other than
the solution-space eigenvalue 1 lies in the closed disk of radius 1/2 around
1/2; the depth inside that disk is controlled by the nonnegative quantity

    c = Re<Bz, z> / (||z||^2 / t + t ||Bz||^2)

through the sharper radius sqrt(1/4 - c/(1+2c)).  The module computes the
iteration matrices, complex spectra with a backward-error check, the disk
report, per-eigenvector depth bounds, relaxation maps, stepsize sweeps and a
best-found constant stepsize.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .dr import dr_step_u
from .errors import NoConvergence, ZeroVector
from .operators import _pivot_checked_solve, linear_operator


@dataclass
class SpectrumReport:
    """Complex spectrum plus the disk diagnostics.

    ``spectral_radius_excluding_fixed`` is the largest magnitude over
    eigenvalues not identified with the solution-space eigenvalue 1
    (0.0 when that set is empty).  ``disk_violations`` lists
    ``(index, |lambda - 1/2| - 1/2)`` for non-fixed eigenvalues outside the
    disk beyond the tolerance.
    """

    eigenvalues: List[complex]
    spectral_radius_excluding_fixed: float
    disk_violations: List[Tuple[int, float]]
    n_fixed: int
    solution_tol: float


def u_iteration_matrix(A: np.ndarray, B: np.ndarray, t: float) -> np.ndarray:
    """Dense iteration matrix of the u-form for linear A, B."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n = A.shape[0]
    tAB = (t * t) * (A @ B)
    system = np.eye(n) + t * A + t * B + tAB
    return _pivot_checked_solve(system, np.eye(n) + tAB)


def y_iteration_matrix(A: np.ndarray, B: np.ndarray, t: float) -> np.ndarray:
    """Dense iteration matrix of the y-form; similar to the u-form matrix."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n = A.shape[0]
    eye = np.eye(n)
    JB = _pivot_checked_solve(eye + t * B, eye)
    JA = _pivot_checked_solve(eye + t * A, eye)
    return JA @ (2.0 * JB - eye) - JB + eye


def spectrum(
    M: np.ndarray,
    solution_tol: float = 1e-6,
    disk_tol: float = 1e-8,
    residual_tol: float = 1e-7,
) -> SpectrumReport:
    """All complex eigenvalues via the dense nonsymmetric QR eigensolver.

    Backward-error check: each eigenpair must satisfy
    ``||M v - lambda v|| <= residual_tol * ||M||`` for its unit eigenvector.

    Raises
    ------
    NoConvergence
        If the underlying QR iteration fails to converge.
    """
    M = np.asarray(M, dtype=float)
    if M.shape[0] != M.shape[1]:
        raise ValueError("spectrum needs a square matrix")
    if M.shape[0] > 512:
        raise ValueError("desk-scale eigensolver: dim must be <= 512")
    try:
        vals, vecs = np.linalg.eig(M)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(str(exc)) from exc
    scale = np.linalg.norm(M, 2) if M.size else 0.0
    resid = np.linalg.norm(M @ vecs - vecs * vals[None, :], axis=0)
    bad = resid > residual_tol * max(scale, 1e-300)
    if np.any(bad):
        raise NoConvergence(
            f"eigenpair residual {np.max(resid):.3e} exceeds {residual_tol:g}*||M||"
        )
    order = np.lexsort((vals.imag, vals.real))
    vals = vals[order]
    fixed = np.abs(vals - 1.0) <= solution_tol
    rest = vals[~fixed]
    rho = float(np.max(np.abs(rest))) if rest.size else 0.0
    violations = []
    for i, lam in enumerate(vals):
        if fixed[i]:
            continue
        dist = abs(lam - 0.5)
        if dist > 0.5 + disk_tol:
            violations.append((i, float(dist - 0.5)))
    return SpectrumReport(
        eigenvalues=[complex(v) for v in vals],
        spectral_radius_excluding_fixed=rho,
        disk_violations=violations,
        n_fixed=int(np.sum(fixed)),
        solution_tol=solution_tol,
    )


def _assert_monotone(M: np.ndarray, probes: int, rng: np.random.Generator) -> None:
    scale = 1.0 + np.linalg.norm(M, "fro")
    for _ in range(probes):
        x = rng.standard_normal(M.shape[0])
        x /= np.linalg.norm(x)
        if float(x @ (M @ x)) < -1e-10 * scale:
            raise ValueError("matrix failed the monotonicity probe")


def disk_check(
    A: np.ndarray,
    B: np.ndarray,
    t: float,
    solution_tol: float = 1e-6,
    probe_seed: int = 0,
) -> SpectrumReport:
    """Spectrum of the u-form matrix with the disk containment report.

    Both matrices are probed for monotonicity (100 random quadratic forms)
    before the eigensolve; an empty violation list is the expected outcome.
    """
    rng = np.random.default_rng(probe_seed)
    _assert_monotone(np.asarray(A, float), 100, rng)
    _assert_monotone(np.asarray(B, float), 100, rng)
    return spectrum(u_iteration_matrix(A, B, t), solution_tol=solution_tol)


def disk_depth(B: np.ndarray, t: float, z: np.ndarray) -> Tuple[float, float]:
    """Depth quantity c of an eigenvector and the sharper disk radius.

    Returns ``(c, sqrt(max(1/4 - c/(1+2c), 0)))``; c is nonnegative whenever
    B is monotone.
    """
    z = np.asarray(z, dtype=complex)
    nz = np.linalg.norm(z)
    if nz == 0.0:
        raise ZeroVector("disk_depth needs a nonzero vector")
    Bz = np.asarray(B, dtype=float) @ z
    c = float(np.vdot(z, Bz).real) / (nz**2 / t + t * float(np.linalg.norm(Bz) ** 2))
    radius = float(np.sqrt(max(0.25 - c / (1.0 + 2.0 * c), 0.0)))
    return c, radius


def eigenvector_inverse_iteration(
    M: np.ndarray, lam: complex, steps: int = 5, seed: int = 0
) -> np.ndarray:
    """Unit eigenvector estimate by shifted inverse iteration.

    Five solves from a seeded random complex start; the shift is jittered by
    1e-10*(1+|lam|) if the shifted matrix is exactly singular.
    """
    M = np.asarray(M, dtype=complex)
    n = M.shape[0]
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x /= np.linalg.norm(x)
    shifted = M - lam * np.eye(n)
    for _ in range(steps):
        try:
            x = np.linalg.solve(shifted, x)
        except np.linalg.LinAlgError:
            shifted = M - (lam + 1e-10 * (1.0 + abs(lam))) * np.eye(n)
            x = np.linalg.solve(shifted, x)
        x /= np.linalg.norm(x)
    return x


def relaxed_eigenvalue(lam: complex, rho: float) -> complex:
    """Eigenvalue map of the relaxed iteration: ``1 - rho + rho * lam``."""
    return 1.0 - rho + rho * lam


def stepsize_sweep(
    A: np.ndarray,
    B: np.ndarray,
    t_grid: Sequence[float],
    n_iters: Sequence[int],
    u0: np.ndarray,
) -> List[Tuple[float, int, float]]:
    """Residual ``||(A+B) u^N||`` after N stationary u-form steps per (t, N).

    Returns rows (t, N, residual) in grid order, one per (t, N) pair.
    """
    if not len(t_grid) or not len(n_iters):
        raise ValueError("grids must be nonempty")
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    checkpoints = sorted(set(int(n) for n in n_iters))
    if checkpoints[0] < 1:
        raise ValueError("iteration counts must be >= 1")
    rows = []
    for t in t_grid:
        opA = linear_operator(A)
        opB = linear_operator(B)
        u = np.array(u0, dtype=float, copy=True)
        seen = {}
        for k in range(1, checkpoints[-1] + 1):
            u = dr_step_u(opA, opB, float(t), u)
            if k in checkpoints:
                seen[k] = float(np.linalg.norm(A @ u + B @ u))
        for n in n_iters:
            rows.append((float(t), int(n), seen[int(n)]))
    return rows


def optimal_constant_stepsize(
    A: np.ndarray,
    B: np.ndarray,
    t_range: Tuple[float, float],
    tol: float = 1e-4,
    grid_points: int = 33,
    solution_tol: float = 1e-6,
) -> Tuple[float, float]:
    """Best-found constant stepsize minimizing the non-fixed spectral radius.

    Coarse geometric scan plus golden-section refinement around the grid
    minimizer.  The radius as a function of t need not be unimodal, so the
    result is the best value found, not a certified global minimum.  When
    every eigenvalue belongs to the solution cluster the problem is
    degenerate and the range midpoint with radius 0.0 is returned.
    """
    lo, hi = float(t_range[0]), float(t_range[1])
    if not (0.0 < lo < hi):
        raise ValueError("need 0 < lo < hi")

    dim = np.asarray(A).shape[0]
    evaluated = {}

    def rho(t: float) -> float:
        if t not in evaluated:
            rep = spectrum(u_iteration_matrix(A, B, t), solution_tol=solution_tol)
            evaluated[t] = (rep.spectral_radius_excluding_fixed, rep.n_fixed)
        return evaluated[t][0]

    mid = 0.5 * (lo + hi)
    rho(mid)
    if evaluated[mid][1] == dim:
        return mid, 0.0

    grid = np.geomspace(lo, hi, grid_points)
    values = [rho(float(t)) for t in grid]
    i_best = int(np.argmin(values))
    a = float(grid[max(i_best - 1, 0)])
    b = float(grid[min(i_best + 1, grid_points - 1)])

    # golden-section refinement inside the bracketing cell
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = rho(x1), rho(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = rho(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = rho(x2)
    t_best = min(evaluated, key=lambda t: evaluated[t][0])
    return float(t_best), float(evaluated[t_best][0])
