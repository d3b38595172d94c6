"""Seeded generators for every experiment problem.

Each generator returns a :class:`ProblemInstance` holding either a monotone
operator pair (for the DR solvers) or a :class:`~drsplit.admm.SplitProblem`
(for ADMM), together with raw data arrays for serialization and reference
quantities where they are computable.  All randomness goes through
``numpy.random.default_rng`` (PCG64), so equal (name, dims, seed) regenerate
bit-identical data.

Suite defaults (documented; the upstream comparison's exact parameters are
not public, so these fix the formulations rather than reproduce numbers):

* elastic_net / lasso: 20x100 raw Gaussian design, planted 10%-sparse signal,
  b = K x_true + 0.1 noise, l1 weight 0.1 ||K^T b||_inf (l2 weight equal to
  the l1 weight for the elastic net, 0 for the lasso)
* qp: dim 50, Q = M^T M + 0.1 I with raw Gaussian M, q ~ 5 N(0,1),
  box [-1, 1]
* logreg: 50 samples x 20 features at scale 2, labels from a planted
  direction plus noise, l1 weight 1.0
* svm: 50 samples x 20 features, hinge weight C = 1.0, margin offset 1

The data is deliberately left unnormalized so that a unit penalty is an
ad-hoc guess, as in the comparisons this suite mirrors.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.fft import dctn, idctn
from scipy.linalg import cho_factor, cho_solve
from scipy.special import expit

from . import archive
from .admm import SplitProblem
from .errors import InvalidName, NoConvergence, RankDeficient
from .operators import (
    MonotoneOperator,
    l1_operator,
    least_squares_operator,
    linear_operator,
    operator_norm,
    project_ball_inf_pairs,
    prox_l1,
)

SUITE_NAMES = ("elastic_net", "lasso", "qp", "logreg", "svm")


@dataclass
class MonotonePair:
    A: MonotoneOperator
    B: MonotoneOperator
    A_mat: Optional[np.ndarray] = None
    B_mat: Optional[np.ndarray] = None


@dataclass
class ProblemInstance:
    """Self-describing seeded test problem."""

    name: str
    seed: int
    pair: Optional[MonotonePair] = None
    split: Optional[SplitProblem] = None
    reference_solution: Optional[np.ndarray] = None
    reference_objective: Optional[float] = None
    objective: Optional[Callable] = None
    arrays: Dict[str, np.ndarray] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def fingerprint(self) -> str:
        return archive.fingerprint(self.name, self.seed, self.arrays, self.meta)

    def save(self, path) -> None:
        archive.save_archive(path, self.name, self.seed, self.arrays, self.meta)


# -- linear toy ---------------------------------------------------------------


def gen_linear_toy(m: int, seed: int) -> ProblemInstance:
    """Rank-deficient SPD pair A = C^T C, B = D^T D with full-rank sum.

    C is (m/2 + 10) x m and D is (m/2) x m, standard Gaussian; m must be an
    even integer >= 20 so the shapes make sense.  The unique solution of
    (A + B) x = 0 is x = 0.
    """
    if m < 20 or m % 2 != 0:
        raise ValueError("m must be an even integer >= 20")
    rng = np.random.default_rng(seed)
    C = rng.standard_normal((m // 2 + 10, m))
    D = rng.standard_normal((m // 2, m))
    A = C.T @ C
    B = D.T @ D
    smin = np.linalg.svd(A + B, compute_uv=False)[-1]
    if smin <= 1e-10:
        raise RankDeficient(
            f"A+B numerically singular for seed {seed} (smin={smin:.3e}); retry with the next seed"
        )
    return ProblemInstance(
        name="linear_toy",
        seed=seed,
        pair=MonotonePair(
            A=linear_operator(A, "toy_A"),
            B=linear_operator(B, "toy_B"),
            A_mat=A,
            B_mat=B,
        ),
        reference_solution=np.zeros(m),
        arrays={"A": A, "B": B},
        meta={"m": m},
    )


# -- LASSO --------------------------------------------------------------------


def lasso_objective(K, b, alpha, x) -> float:
    r = K @ x - b
    return 0.5 * float(r @ r) + alpha * float(np.sum(np.abs(x)))


def fista_baseline(
    K: np.ndarray, b: np.ndarray, alpha: float, iters: int
) -> Tuple[np.ndarray, float]:
    """Plain accelerated proximal gradient on the l1-regularized least squares.

    Step 1/L with L = ||K||^2 (power-iteration estimate, inflated by 1e-6 to
    stay on the safe side of the estimate's own error); no restarts.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    K = np.asarray(K, dtype=float)
    b = np.asarray(b, dtype=float)
    L = (1.0 + 1e-6) * operator_norm(K) ** 2
    x = np.zeros(K.shape[1])
    y = x
    tk = 1.0
    for _ in range(iters):
        grad = K.T @ (K @ y - b)
        x_new = prox_l1(alpha, 1.0 / L, y - grad / L)
        tk1 = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk * tk))
        y = x_new + ((tk - 1.0) / tk1) * (x_new - x)
        x, tk = x_new, tk1
    return x, lasso_objective(K, b, alpha, x)


def gen_lasso(
    rows: int, cols: int, alpha: float, seed: int, reference_iters: int = 20_000
) -> ProblemInstance:
    """l1-regularized least squares with an orthonormal-row design matrix.

    A is the subdifferential of the l1 term (soft-threshold resolvent), B the
    gradient of the quadratic data term (single-valued, matrix-free
    resolvent).  The reference objective comes from a long accelerated
    proximal gradient run; pass ``reference_iters=0`` to skip it.
    """
    if rows > cols:
        raise ValueError("need rows <= cols")
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((cols, rows))
    Q, _ = np.linalg.qr(G)
    K = Q.T.copy()
    b = rng.standard_normal(rows)
    inst = ProblemInstance(
        name="lasso",
        seed=seed,
        pair=MonotonePair(A=l1_operator(alpha, cols), B=least_squares_operator(K, b)),
        arrays={"K": K, "b": b.reshape(1, -1)},
        meta={"rows": rows, "cols": cols, "alpha": alpha},
    )
    inst.objective = lambda x: lasso_objective(K, b, alpha, x)
    if reference_iters > 0:
        x_ref, obj_ref = fista_baseline(K, b, alpha, reference_iters)
        inst.reference_solution = x_ref
        inst.reference_objective = obj_ref
    return inst


# -- ROF / total variation saddle point ---------------------------------------


def gradient_matrix(m: int, n: int) -> np.ndarray:
    """Forward-difference discrete gradient (replicate boundary) as a dense
    (2mn x mn) matrix: first mn rows horizontal, last mn rows vertical."""
    P = m * n
    Kx = np.zeros((P, P))
    Ky = np.zeros((P, P))
    for i in range(m):
        for j in range(n):
            p = i * n + j
            if j < n - 1:
                Kx[p, p] = -1.0
                Kx[p, p + 1] = 1.0
            if i < m - 1:
                Ky[p, p] = -1.0
                Ky[p, p + n] = 1.0
    return np.vstack([Kx, Ky])


def rof_energy(u: np.ndarray, u0: np.ndarray, lam: float, K: np.ndarray) -> float:
    g = K @ u
    half = g.size // 2
    tv = float(np.sum(np.hypot(g[:half], g[half:])))
    return 0.5 * float(np.sum((u - u0) ** 2)) + lam * tv


def synthetic_step_image(m: int, n: Optional[int] = None) -> np.ndarray:
    """Deterministic two-level test image: left half 0, right half 1."""
    n = n or m
    img = np.zeros((m, n))
    img[:, n // 2 :] = 1.0
    return img


class _SkewSaddleResolvent:
    """Resolvent of the skew coupling block of the saddle operator.

    Solving (I + tB) z = x reduces to one SPD solve on the image block,
    ``(I + t^2 K^T K) u = x_u - t K^T x_phi``, then ``phi = x_phi + t K u``.
    Factorizations are cached per t (small LRU).
    """

    def __init__(self, K: np.ndarray, maxsize: int = 8):
        self.K = K
        self.KtK = K.T @ K
        self.P = K.shape[1]
        self._cache: OrderedDict = OrderedDict()
        self._lock = threading.Lock()
        self._maxsize = maxsize

    def __call__(self, t: float, x: np.ndarray) -> np.ndarray:
        factors = self._cache.get(t)
        if factors is None:
            factors = cho_factor(np.eye(self.P) + (t * t) * self.KtK)
            with self._lock:
                self._cache[t] = factors
                while len(self._cache) > self._maxsize:
                    self._cache.popitem(last=False)
        xu, xphi = x[: self.P], x[self.P :]
        u = cho_solve(factors, xu - t * (self.K.T @ xphi))
        phi = xphi + t * (self.K @ u)
        return np.concatenate([u, phi])


class _GridGradient:
    """Matrix-free forward-difference gradient on an m x n grid.

    Same stencil and replicate boundary as :func:`gradient_matrix`, but via
    array slicing, so paper-scale images stay feasible.  The normal matrix
    K^T K is the 5-point Neumann Laplacian, which the type-II cosine basis
    diagonalizes; the image-block solve of the skew resolvent is therefore
    two cosine transforms and a pointwise scaling.
    """

    def __init__(self, m: int, n: int):
        self.m, self.n = m, n
        self.P = m * n
        ii = 4.0 * np.sin(np.pi * np.arange(m) / (2.0 * m)) ** 2
        jj = 4.0 * np.sin(np.pi * np.arange(n) / (2.0 * n)) ** 2
        self.laplace_eigs = ii[:, None] + jj[None, :]

    def apply(self, u: np.ndarray) -> np.ndarray:
        U = u.reshape(self.m, self.n)
        gx = np.zeros_like(U)
        gy = np.zeros_like(U)
        gx[:, :-1] = U[:, 1:] - U[:, :-1]
        gy[:-1, :] = U[1:, :] - U[:-1, :]
        return np.concatenate([gx.ravel(), gy.ravel()])

    def apply_adjoint(self, g: np.ndarray) -> np.ndarray:
        gx = g[: self.P].reshape(self.m, self.n)
        gy = g[self.P :].reshape(self.m, self.n)
        out = np.zeros((self.m, self.n))
        out[:, :-1] -= gx[:, :-1]
        out[:, 1:] += gx[:, :-1]
        out[:-1, :] -= gy[:-1, :]
        out[1:, :] += gy[:-1, :]
        return out.ravel()

    def solve_shifted_laplacian(self, t: float, rhs: np.ndarray) -> np.ndarray:
        spectrum = dctn(rhs.reshape(self.m, self.n), type=2, norm="ortho")
        spectrum /= 1.0 + (t * t) * self.laplace_eigs
        return idctn(spectrum, type=2, norm="ortho").ravel()


class _SkewSaddleResolventGrid:
    """Matrix-free counterpart of :class:`_SkewSaddleResolvent`."""

    def __init__(self, grad: _GridGradient):
        self.grad = grad

    def __call__(self, t: float, x: np.ndarray) -> np.ndarray:
        P = self.grad.P
        xu, xphi = x[:P], x[P:]
        u = self.grad.solve_shifted_laplacian(t, xu - t * self.grad.apply_adjoint(xphi))
        phi = xphi + t * self.grad.apply(u)
        return np.concatenate([u, phi])


def gen_rof_saddle(
    image: np.ndarray, lam: float, structured: Optional[bool] = None
) -> ProblemInstance:
    """Total-variation denoising as a saddle-point monotone inclusion.

    The product-space variable is ``z = [u | phi]`` with the dual field phi
    split into horizontal/vertical halves.  A couples the data-term resolvent
    on u with the pixelwise disk projection on phi (multivalued); B is the
    skew coupling with the discrete gradient (single-valued linear), so the
    u-form with the single-valued adaptive rule applies.

    Small images use the dense gradient matrix; above 1024 pixels (or with
    ``structured=True``) the matrix-free cosine-transform path takes over,
    which keeps paper-scale images (256 x 256) feasible.  Both paths compute
    the same operator.
    """
    image = np.asarray(image, dtype=float)
    if image.ndim != 2 or min(image.shape) < 2:
        raise ValueError("image must be 2-D with both sides >= 2")
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    m, n = image.shape
    P = m * n
    u0 = image.ravel().copy()
    if structured is None:
        structured = P > 1024

    if structured:
        grad = _GridGradient(m, n)
        apply_k = grad.apply
        apply_kt = grad.apply_adjoint
        resolvent_b = _SkewSaddleResolventGrid(grad)
    else:
        K = gradient_matrix(m, n)
        apply_k = lambda u: K @ u
        apply_kt = lambda g: K.T @ g
        resolvent_b = _SkewSaddleResolvent(K)

    def resolvent_a(t, x):
        zu = (x[:P] + t * u0) / (1.0 + t)
        return np.concatenate([zu, project_ball_inf_pairs(lam, x[P:])])

    def forward_b(x):
        return np.concatenate([apply_kt(x[P:]), -apply_k(x[:P])])

    def energy(z):
        g = apply_k(z[:P])
        tv = float(np.sum(np.hypot(g[:P], g[P:])))
        return 0.5 * float(np.sum((z[:P] - u0) ** 2)) + lam * tv

    op_a = MonotoneOperator(dim=3 * P, resolvent=resolvent_a, label="rof_separable")
    op_b = MonotoneOperator(
        dim=3 * P,
        resolvent=resolvent_b,
        forward=forward_b,
        label="rof_skew_coupling",
    )
    inst = ProblemInstance(
        name="rof",
        seed=0,
        pair=MonotonePair(A=op_a, B=op_b),
        arrays={"image": image},
        meta={"m": m, "n": n, "lam": lam, "structured": bool(structured)},
    )
    inst.objective = energy
    return inst


# -- ADMM suite ----------------------------------------------------------------


class _GramSolver:
    """Solves (alpha I + beta G) x = rhs from one eigendecomposition of G."""

    def __init__(self, G: np.ndarray):
        self.lam, self.V = np.linalg.eigh(G)

    def __call__(self, alpha: float, beta: float, rhs: np.ndarray) -> np.ndarray:
        return self.V @ ((self.V.T @ rhs) / (alpha + beta * self.lam))


def _logreg_prox(Z: np.ndarray, tol: float = 1e-10, max_iters: int = 50):
    """Damped-Newton oracle for the logistic block, warm-started per call."""
    warm = [np.zeros(Z.shape[1])]

    def value(u, t, r):
        return float(np.sum(np.logaddexp(0.0, -(Z @ u)))) + 0.5 * t * float(
            np.sum((u - r) ** 2)
        )

    def prox(t, r):
        u = warm[0].copy()
        fu = value(u, t, r)
        for _ in range(max_iters):
            margins = Z @ u
            p = expit(-margins)
            grad = -(Z.T @ p) + t * (u - r)
            if np.linalg.norm(grad) <= tol:
                warm[0] = u
                return u
            W = p * (1.0 - p)
            H = Z.T @ (W[:, None] * Z) + t * np.eye(Z.shape[1])
            du = np.linalg.solve(H, -grad)
            step = 1.0
            while step > 1e-12:
                u_try = u + step * du
                f_try = value(u_try, t, r)
                if f_try <= fu + 1e-4 * step * float(grad @ du):
                    u, fu = u_try, f_try
                    break
                step *= 0.5
            else:
                break
        margins = Z @ u
        grad = -(Z.T @ expit(-margins)) + t * (u - r)
        if np.linalg.norm(grad) > 1e-6 * (1.0 + t * (1.0 + np.linalg.norm(r))):
            raise NoConvergence("logistic prox Newton did not converge")
        warm[0] = u
        return u

    return prox


def elastic_net_split(
    K: np.ndarray, b: np.ndarray, rho1: float, rho2: float = 0.0
) -> SplitProblem:
    """Split form of ``min 0.5||Ku-b||^2 + rho1||v||_1 + rho2/2 ||v||^2``
    under the consensus constraint u - v = 0 (rho2 = 0 gives the lasso)."""
    K = np.asarray(K, dtype=float)
    b = np.asarray(b, dtype=float)
    cols = K.shape[1]
    solver = _GramSolver(K.T @ K)
    Ktb = K.T @ b
    D = np.eye(cols)
    E = -np.eye(cols)
    c = np.zeros(cols)

    def phi_prox(t, r):
        return solver(t, 1.0, Ktb + t * r)

    def psi_prox(t, r):
        return prox_l1(rho1 / (rho2 + t), 1.0, -t * r / (rho2 + t))

    def objective(u, v):
        res = K @ u - b
        return (
            0.5 * float(res @ res)
            + rho1 * float(np.sum(np.abs(v)))
            + 0.5 * rho2 * float(v @ v)
        )

    return SplitProblem(phi_prox, psi_prox, D, E, c, objective, cols, cols)


def gen_admm_suite(name: str, dims=None, seed: int = 0) -> ProblemInstance:
    """Two-block split instances for the ADMM comparison."""
    if name not in SUITE_NAMES:
        raise InvalidName(f"unknown suite problem {name!r}; choose from {SUITE_NAMES}")
    rng = np.random.default_rng(seed)

    if name in ("elastic_net", "lasso"):
        rows, cols = dims or (20, 100)
        K = rng.standard_normal((rows, cols))
        x_true = np.zeros(cols)
        support = rng.choice(cols, size=max(1, cols // 10), replace=False)
        x_true[support] = rng.standard_normal(support.size)
        b = K @ x_true + 0.1 * rng.standard_normal(rows)
        rho1 = 0.1 * float(np.max(np.abs(K.T @ b)))
        rho2 = rho1 if name == "elastic_net" else 0.0
        split = elastic_net_split(K, b, rho1, rho2)
        arrays = {"K": K, "b": b.reshape(1, -1)}
        meta = {"rows": rows, "cols": cols, "rho1": rho1, "rho2": rho2}

    elif name == "qp":
        ndim = dims or 50
        M = rng.standard_normal((ndim, ndim))
        Q = M.T @ M + 0.1 * np.eye(ndim)
        q = 5.0 * rng.standard_normal(ndim)
        lo_box, hi_box = -1.0, 1.0
        solver = _GramSolver(Q)
        D = np.eye(ndim)
        E = -np.eye(ndim)
        c = np.zeros(ndim)

        def phi_prox(t, r):
            return solver(t, 1.0, t * r - q)

        def psi_prox(t, r):
            return np.clip(-r, lo_box, hi_box)

        def objective(u, v):
            # indicator term is exactly zero: the v-oracle projects into the box
            return 0.5 * float(u @ (Q @ u)) + float(q @ u)

        split = SplitProblem(phi_prox, psi_prox, D, E, c, objective, ndim, ndim)
        arrays = {"Q": Q, "q": q.reshape(1, -1)}
        meta = {"dim": ndim, "lo": lo_box, "hi": hi_box}

    elif name == "logreg":
        samples, features = dims or (50, 20)
        X = 2.0 * rng.standard_normal((samples, features))
        w_true = rng.standard_normal(features)
        y = np.sign(X @ w_true + 0.5 * rng.standard_normal(samples))
        y[y == 0] = 1.0
        Z = y[:, None] * X
        rho = 1.0
        D = np.eye(features)
        E = -np.eye(features)
        c = np.zeros(features)
        phi_prox = _logreg_prox(Z)

        def psi_prox(t, r):
            return prox_l1(rho / t, 1.0, -r)

        def objective(u, v):
            return float(np.sum(np.logaddexp(0.0, -(Z @ u)))) + rho * float(
                np.sum(np.abs(v))
            )

        split = SplitProblem(phi_prox, psi_prox, D, E, c, objective, features, features)
        arrays = {"X": X, "y": y.reshape(1, -1)}
        meta = {"samples": samples, "features": features, "rho": rho}

    else:  # svm
        samples, features = dims or (50, 20)
        X = rng.standard_normal((samples, features))
        w_true = rng.standard_normal(features)
        y = np.sign(X @ w_true + 0.3 * rng.standard_normal(samples))
        y[y == 0] = 1.0
        C = 1.0
        D = y[:, None] * X
        E = -np.eye(samples)
        c = np.ones(samples)
        solver = _GramSolver(D.T @ D)

        def phi_prox(t, r):
            return solver(1.0, t, t * (D.T @ r))

        def psi_prox(t, r):
            z = -r
            return np.where(z >= 1.0, z, np.where(z <= 1.0 - C / t, z + C / t, 1.0))

        def objective(u, v):
            return 0.5 * float(u @ u) + C * float(np.sum(np.maximum(0.0, 1.0 - v)))

        split = SplitProblem(phi_prox, psi_prox, D, E, c, objective, features, samples)
        arrays = {"X": X, "y": y.reshape(1, -1)}
        meta = {"samples": samples, "features": features, "C": C}

    return ProblemInstance(name=name, seed=seed, split=split, arrays=arrays, meta=meta)


def gen_strongly_convex_qp(
    seed: int, n_u: int = 8, n_v: int = 8, m: int = 6
) -> ProblemInstance:
    """Coupled QP with strongly convex blocks on both sides.

    Both conjugates are differentiable, so the second dual-block operator is
    single-valued along any run; this is the catalog problem for the exact
    ADMM-to-dual-DR correspondence check.
    """
    rng = np.random.default_rng(seed)
    M1 = rng.standard_normal((n_u, n_u)) / np.sqrt(n_u)
    M2 = rng.standard_normal((n_v, n_v)) / np.sqrt(n_v)
    Q1 = M1.T @ M1 + np.eye(n_u)
    Q2 = M2.T @ M2 + np.eye(n_v)
    q1 = rng.standard_normal(n_u)
    q2 = rng.standard_normal(n_v)
    D = rng.standard_normal((m, n_u))
    E = rng.standard_normal((m, n_v))
    c = rng.standard_normal(m)

    def phi_prox(t, r):
        return np.linalg.solve(Q1 + t * (D.T @ D), t * (D.T @ r) - q1)

    def psi_prox(t, r):
        return np.linalg.solve(Q2 + t * (E.T @ E), t * (E.T @ r) - q2)

    def objective(u, v):
        return (
            0.5 * float(u @ (Q1 @ u))
            + float(q1 @ u)
            + 0.5 * float(v @ (Q2 @ v))
            + float(q2 @ v)
        )

    split = SplitProblem(phi_prox, psi_prox, D, E, c, objective, n_u, n_v)
    return ProblemInstance(
        name="qp_strongly_convex",
        seed=seed,
        split=split,
        arrays={"Q1": Q1, "Q2": Q2, "D": D, "E": E,
                "q1": q1.reshape(1, -1), "q2": q2.reshape(1, -1), "c": c.reshape(1, -1)},
        meta={"n_u": n_u, "n_v": n_v, "m": m},
    )
