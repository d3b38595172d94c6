"""Monotone operators, resolvents and proximal maps.

Everything works on plain 1-D ``float64`` numpy arrays.  An operator is

    x  ->  T(x)          (forward map, only when single-valued)
    (t, x) -> J_{tT}(x)  (resolvent, always available)

wrapped in :class:`MonotoneOperator`.  The module also provides the dense
linear resolvent with its cached-factorization variant and the small catalog
of proximal maps used by the solvers.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import NotOrthonormal, NotSingleValued, SingularSystem

# Denominator guard convention: a quotient num/den counts as "infinite" when
# den < GUARD * (1 + num).  Callers map the infinity into their clamp bounds.
GUARD = 1e-12

PIVOT_TOL = 1e-14


def guarded_quotient(num: float, den: float) -> float:
    """num / den, or ``inf`` under the denominator guard."""
    if den < GUARD * (1.0 + num):
        return np.inf
    return num / den


@dataclass(frozen=True)
class MonotoneOperator:
    """A maximal monotone operator exposed through its resolvent.

    Parameters
    ----------
    dim : int
        Dimension of the space the operator acts on.
    resolvent : callable
        ``resolvent(t, x) -> J_{tT}(x)`` for ``t > 0``.
    forward : callable, optional
        ``forward(x) -> T(x)``; present only for single-valued operators.
    label : str
        Human-readable tag used in traces and error messages.
    """

    dim: int
    resolvent: Callable[[float, np.ndarray], np.ndarray]
    forward: Optional[Callable[[np.ndarray], np.ndarray]] = None
    label: str = ""

    @property
    def single_valued(self) -> bool:
        return self.forward is not None

    def apply_forward(self, x: np.ndarray) -> np.ndarray:
        if self.forward is None:
            raise NotSingleValued(
                f"operator {self.label!r} has no forward evaluation"
            )
        return self.forward(x)


def linear_resolvent(M: np.ndarray, t: float, x: np.ndarray) -> np.ndarray:
    """Solve ``(I + t M) z = x`` by dense LU with partial pivoting.

    Raises
    ------
    SingularSystem
        If an LU pivot falls below ``1e-14`` (non-monotone or degenerate M).
    """
    M = np.asarray(M, dtype=float)
    system = np.eye(M.shape[0]) + t * M
    return _pivot_checked_solve(system, np.asarray(x, dtype=float))


def _pivot_checked_solve(system: np.ndarray, x: np.ndarray) -> np.ndarray:
    lu, piv = _pivot_checked_factor(system)
    return lu_solve((lu, piv), x)


def _pivot_checked_factor(system: np.ndarray):
    lu, piv = lu_factor(system, check_finite=False)
    if np.min(np.abs(np.diag(lu))) < PIVOT_TOL:
        raise SingularSystem(
            f"LU pivot below {PIVOT_TOL:g} in {system.shape[0]}-dim resolvent solve"
        )
    return lu, piv


class _ResolventCache:
    """Small LRU of LU factorizations of ``I + t M``, keyed by ``t``.

    Stationary runs reuse a single stepsize, so the factorization is paid
    once.  Adaptive runs produce a fresh ``t`` per iteration; the LRU bound
    keeps them from hoarding memory.  Reads are safe from several threads;
    insertion is serialized by a lock (single-writer initialization).
    """

    def __init__(self, M: np.ndarray, maxsize: int = 8):
        self.M = np.asarray(M, dtype=float)
        self._eye = np.eye(self.M.shape[0])
        self._cache: OrderedDict = OrderedDict()
        self._lock = threading.Lock()
        self._maxsize = maxsize

    def solve(self, t: float, x: np.ndarray) -> np.ndarray:
        factors = self._cache.get(t)
        if factors is None:
            factors = _pivot_checked_factor(self._eye + t * self.M)
            with self._lock:
                self._cache[t] = factors
                while len(self._cache) > self._maxsize:
                    self._cache.popitem(last=False)
        return lu_solve(factors, x)


def linear_operator(M: np.ndarray, label: str = "linear") -> MonotoneOperator:
    """Wrap a monotone matrix: forward ``x -> Mx``, cached-LU resolvent."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("linear_operator needs a square matrix")
    cache = _ResolventCache(M)
    return MonotoneOperator(
        dim=M.shape[0],
        resolvent=cache.solve,
        forward=lambda x: M @ x,
        label=label,
    )


def zero_operator(dim: int) -> MonotoneOperator:
    """The zero operator; its resolvent is the identity."""
    return MonotoneOperator(
        dim=dim,
        resolvent=lambda t, x: np.array(x, dtype=float, copy=True),
        forward=lambda x: np.zeros(dim),
        label="zero",
    )


def prox_l1(alpha: float, t: float, x: np.ndarray) -> np.ndarray:
    """Soft thresholding: componentwise ``max(|x| - t*alpha, 0) * sign(x)``."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - t * alpha, 0.0)


def l1_operator(alpha: float, dim: int) -> MonotoneOperator:
    """Subdifferential of ``alpha * ||.||_1`` (multivalued; resolvent only)."""
    return MonotoneOperator(
        dim=dim,
        resolvent=lambda t, x: prox_l1(alpha, t, x),
        label=f"l1(alpha={alpha:g})",
    )


def prox_least_squares_orthorows(
    K: np.ndarray, b: np.ndarray, t: float, x: np.ndarray
) -> np.ndarray:
    """Resolvent of the gradient of ``0.5 ||K. - b||^2`` for ``K K^T = I``.

    Matrix-free evaluation of ``(I - t/(t+1) K^T K)(x + t K^T b)``; only valid
    when K has orthonormal rows (checked once where the operator is built).
    """
    y = x + t * (K.T @ b)
    return y - (t / (t + 1.0)) * (K.T @ (K @ y))


def least_squares_operator(K: np.ndarray, b: np.ndarray) -> MonotoneOperator:
    """Gradient of ``0.5 ||Kx - b||^2`` for a K with orthonormal rows.

    Raises
    ------
    NotOrthonormal
        If ``max|K K^T - I| > 1e-8`` at construction.
    """
    K = np.asarray(K, dtype=float)
    b = np.asarray(b, dtype=float)
    gram = K @ K.T
    defect = np.max(np.abs(gram - np.eye(K.shape[0])))
    if defect > 1e-8:
        raise NotOrthonormal(
            f"rows not orthonormal: max|KK^T - I| = {defect:.3e}"
        )
    return MonotoneOperator(
        dim=K.shape[1],
        resolvent=lambda t, x: prox_least_squares_orthorows(K, b, t, x),
        forward=lambda x: K.T @ (K @ x - b),
        label="least_squares_gradient",
    )


def project_ball_inf_pairs(radius: float, phi: np.ndarray) -> np.ndarray:
    """Project a 2-channel field onto pixelwise disks of the given radius.

    ``phi`` is flat with the two channels stored as consecutive halves
    ``[c1_0 .. c1_{P-1} | c2_0 .. c2_{P-1}]``.  Pixels whose Euclidean
    channel magnitude exceeds ``radius`` are rescaled onto the disk
    boundary; the rest pass through unchanged.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.size % 2 != 0:
        raise ValueError("pair field must have an even number of entries")
    half = phi.size // 2
    c1, c2 = phi[:half], phi[half:]
    mag = np.hypot(c1, c2)
    scale = np.where(mag > radius, radius / np.where(mag > 0, mag, 1.0), 1.0)
    return np.concatenate([c1 * scale, c2 * scale])


def shift_operator(B: MonotoneOperator, y: np.ndarray) -> MonotoneOperator:
    """Operator for ``x -> Bx - y``; turns ``(A+B)x = y`` into a zero problem.

    The resolvent of the shifted operator is ``x -> J_{tB}(x + t y)``.
    """
    y = np.asarray(y, dtype=float)
    forward = None
    if B.forward is not None:
        base_forward = B.forward
        forward = lambda x: base_forward(x) - y
    return MonotoneOperator(
        dim=B.dim,
        resolvent=lambda t, x: B.resolvent(t, x + t * y),
        forward=forward,
        label=f"shifted({B.label})",
    )


def operator_norm(M: np.ndarray, iters: int = 200, seed: int = 0) -> float:
    """Largest singular value of M by power iteration on ``M^T M``.

    Fixed-seed start vector; relative error is about 1e-6 on well-separated
    spectra with the default 200 iterations (documented, not guaranteed).
    """
    M = np.asarray(M, dtype=float)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(M.shape[1])
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return 0.0
    v /= nv
    for _ in range(iters):
        w = M.T @ (M @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
    return float(np.linalg.norm(M @ v))


def random_monotone_matrix(
    dim: int, rng: np.random.Generator, skew_scale: float = 1.0
) -> np.ndarray:
    """Random monotone test matrix ``C^T C + S`` with S skew-symmetric."""
    C = rng.standard_normal((dim, dim)) / np.sqrt(dim)
    G = rng.standard_normal((dim, dim)) * skew_scale / np.sqrt(dim)
    return C.T @ C + (G - G.T) / 2.0


def firm_nonexpansiveness_violation(
    op: MonotoneOperator, t: float, x: np.ndarray, y: np.ndarray
) -> float:
    """``||Jx - Jy||^2 - <Jx - Jy, x - y>``; should be <= tolerance.

    Positive values beyond roundoff witness a non-firmly-nonexpansive map,
    i.e. a broken resolvent or a non-monotone operator.
    """
    jx = op.resolvent(t, x)
    jy = op.resolvent(t, y)
    d = jx - jy
    return float(d @ d - d @ (x - y))
