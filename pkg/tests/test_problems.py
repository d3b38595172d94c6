import numpy as np
import pytest
from numpy.testing import assert_allclose

from drsplit.archive import (
    load_archive,
    read_matrix_text,
    save_archive,
    write_matrix_text,
)
from drsplit.dr import StopRule, solve_dr
from drsplit.errors import InvalidName
from drsplit.operators import firm_nonexpansiveness_violation
from drsplit.problems import (
    fista_baseline,
    gen_admm_suite,
    gen_lasso,
    gen_linear_toy,
    gen_rof_saddle,
    gen_strongly_convex_qp,
    gradient_matrix,
    rof_energy,
    synthetic_step_image,
)
from drsplit.stepsize import StepsizeController


# -- linear toy -----------------------------------------------------------------


def test_linear_toy_ranks_and_reference():
    inst = gen_linear_toy(20, 0)
    A, B = inst.pair.A_mat, inst.pair.B_mat
    assert np.linalg.matrix_rank(A) == 20
    assert np.linalg.matrix_rank(B) == 10
    assert np.linalg.norm(A @ inst.reference_solution + B @ inst.reference_solution) == 0.0


def test_linear_toy_full_scale_shape():
    inst = gen_linear_toy(200, 1)
    assert inst.pair.A_mat.shape == (200, 200)
    assert np.linalg.matrix_rank(inst.pair.B_mat) == 100


def test_linear_toy_rejects_bad_size():
    with pytest.raises(ValueError):
        gen_linear_toy(18, 0)
    with pytest.raises(ValueError):
        gen_linear_toy(21, 0)


def test_linear_toy_deterministic():
    a = gen_linear_toy(20, 5)
    b = gen_linear_toy(20, 5)
    assert a.fingerprint() == b.fingerprint()
    assert np.array_equal(a.pair.A_mat, b.pair.A_mat)
    assert gen_linear_toy(20, 6).fingerprint() != a.fingerprint()


# -- lasso ------------------------------------------------------------------------


def test_lasso_operators_and_reference():
    inst = gen_lasso(10, 40, 0.5, 0, reference_iters=5000)
    K = inst.arrays["K"]
    assert np.max(np.abs(K @ K.T - np.eye(10))) <= 1e-10
    assert inst.reference_objective is not None
    assert inst.objective(inst.reference_solution) == pytest.approx(
        inst.reference_objective
    )


def test_fista_scalar_soft_threshold_fixed_point():
    x, obj = fista_baseline(np.array([[1.0]]), np.array([2.0]), 0.5, 2000)
    assert x[0] == pytest.approx(1.5, abs=1e-8)
    assert obj == pytest.approx(0.5 * 0.25 + 0.5 * 1.5, abs=1e-8)


def test_fista_huge_alpha_returns_zero():
    rng = np.random.default_rng(1)
    K = np.linalg.qr(rng.standard_normal((30, 8)))[0].T
    b = rng.standard_normal(8)
    x, obj = fista_baseline(K, b, 1e6, 50)
    assert_allclose(x, np.zeros(30))
    assert obj == pytest.approx(0.5 * float(b @ b))


def test_fista_alpha_zero_objective_vanishes():
    # full-row-rank wide K makes Kx = b attainable, so the minimum is 0
    rng = np.random.default_rng(2)
    K = np.linalg.qr(rng.standard_normal((30, 8)))[0].T
    b = rng.standard_normal(8)
    _, obj = fista_baseline(K, b, 0.0, 4000)
    assert obj <= 1e-10


def test_lasso_dr_matches_fista(tmp_path):
    inst = gen_lasso(10, 40, 0.5, 3, reference_iters=30_000)
    ctrl = StepsizeController.adaptive_single_valued()
    res = solve_dr(
        inst.pair.A,
        inst.pair.B,
        ctrl,
        StopRule(max_iters=20_000, tol=1e-12),
        "u",
        np.zeros(40),
        objective=inst.objective,
    )
    assert abs(res.trace.objective[-1] - inst.reference_objective) <= 1e-7


# -- ROF saddle -------------------------------------------------------------------


def test_gradient_matrix_small():
    K = gradient_matrix(2, 2)
    u = np.array([1.0, 2.0, 3.0, 4.0])  # [[1,2],[3,4]]
    g = K @ u
    # horizontal differences (Neumann: last column zero)
    assert_allclose(g[:4], [1.0, 0.0, 1.0, 0.0])
    # vertical differences (last row zero)
    assert_allclose(g[4:], [2.0, 2.0, 0.0, 0.0])


def test_rof_skew_coupling():
    inst = gen_rof_saddle(synthetic_step_image(4), 0.1)
    B = inst.pair.B
    rng = np.random.default_rng(3)
    for _ in range(100):
        z = rng.standard_normal(B.dim)
        assert abs(z @ B.apply_forward(z)) <= 1e-10 * (1 + z @ z)


def test_rof_operators_firmly_nonexpansive():
    inst = gen_rof_saddle(synthetic_step_image(4), 0.2)
    rng = np.random.default_rng(4)
    for op in (inst.pair.A, inst.pair.B):
        worst = 0.0
        for _ in range(200):
            x = rng.standard_normal(op.dim)
            y = rng.standard_normal(op.dim)
            t = float(rng.uniform(0.1, 5.0))
            worst = max(worst, firm_nonexpansiveness_violation(op, t, x, y))
        assert worst <= 1e-9


def test_rof_constant_image_is_fixed():
    img = np.full((4, 4), 2.5)
    inst = gen_rof_saddle(img, 0.3)
    x0 = np.concatenate([img.ravel(), np.zeros(32)])
    res = solve_dr(
        inst.pair.A,
        inst.pair.B,
        StepsizeController.fixed(1.0),
        StopRule(max_iters=2000, tol=1e-12),
        "u",
        x0,
    )
    assert_allclose(res.solution[:16], img.ravel(), atol=1e-8)


def test_rof_zero_regularization_returns_data():
    img = synthetic_step_image(4)
    inst = gen_rof_saddle(img, 0.0)
    x0 = np.concatenate([np.zeros(16), np.ones(32)])
    res = solve_dr(
        inst.pair.A,
        inst.pair.B,
        StepsizeController.fixed(1.0),
        StopRule(max_iters=5000, tol=1e-12),
        "u",
        x0,
    )
    assert_allclose(res.solution[:16], img.ravel(), atol=1e-8)


def test_rof_energy_of_constant_image():
    img = np.full((3, 3), 1.0)
    K = gradient_matrix(3, 3)
    assert rof_energy(img.ravel(), img.ravel(), 0.7, K) == 0.0


def test_rof_structured_path_matches_dense():
    img = synthetic_step_image(8, 10)
    dense = gen_rof_saddle(img, 0.15, structured=False)
    grid = gen_rof_saddle(img, 0.15, structured=True)
    rng = np.random.default_rng(7)
    for _ in range(20):
        z = rng.standard_normal(dense.pair.B.dim)
        t = float(rng.uniform(0.1, 10.0))
        assert np.allclose(
            dense.pair.B.apply_forward(z), grid.pair.B.apply_forward(z),
            atol=1e-12, rtol=0,
        )
        assert np.allclose(
            dense.pair.B.resolvent(t, z), grid.pair.B.resolvent(t, z),
            atol=1e-10, rtol=0,
        )
        assert dense.objective(z) == pytest.approx(grid.objective(z), abs=1e-10)


def test_rof_paper_scale_is_feasible():
    # matrix-free path handles large grids; one resolvent + forward as smoke
    img = synthetic_step_image(64)
    inst = gen_rof_saddle(img, 0.1)
    assert inst.meta["structured"] is True
    rng = np.random.default_rng(8)
    z = rng.standard_normal(inst.pair.B.dim)
    out = inst.pair.B.resolvent(1.3, z)
    back = out + 1.3 * inst.pair.B.apply_forward(out)
    assert np.linalg.norm(back - z) <= 1e-9 * (1 + np.linalg.norm(z))


def test_rof_rejects_bad_input():
    with pytest.raises(ValueError):
        gen_rof_saddle(np.ones(5), 0.1)
    with pytest.raises(ValueError):
        gen_rof_saddle(np.ones((1, 5)), 0.1)
    with pytest.raises(ValueError):
        gen_rof_saddle(np.ones((4, 4)), -0.1)


# -- ADMM suite --------------------------------------------------------------------


def test_suite_rejects_unknown_name():
    with pytest.raises(InvalidName):
        gen_admm_suite("portfolio")


def test_suite_default_shapes():
    en = gen_admm_suite("elastic_net", seed=0)
    assert en.arrays["K"].shape == (20, 100)
    qp = gen_admm_suite("qp", seed=0)
    assert qp.arrays["Q"].shape == (50, 50)
    lr = gen_admm_suite("logreg", seed=0)
    assert lr.arrays["X"].shape == (50, 20)
    svm = gen_admm_suite("svm", seed=0)
    assert svm.arrays["X"].shape == (50, 20)


def test_suite_deterministic():
    for name in ("elastic_net", "lasso", "qp", "logreg", "svm"):
        assert (
            gen_admm_suite(name, seed=3).fingerprint()
            == gen_admm_suite(name, seed=3).fingerprint()
        )


def test_suite_oracles_satisfy_first_order_optimality():
    # differentiable blocks: gradient of the subproblem vanishes at the oracle
    rng = np.random.default_rng(5)

    qp = gen_strongly_convex_qp(0)
    Q1, D = qp.arrays["Q1"], qp.arrays["D"]
    q1 = qp.arrays["q1"].ravel()
    r = rng.standard_normal(D.shape[0])
    for t in (0.3, 1.0, 4.0):
        u = qp.split.phi_prox(t, r)
        grad = Q1 @ u + q1 + t * (D.T @ (D @ u - r))
        assert np.linalg.norm(grad) <= 1e-8 * (1 + np.linalg.norm(u))

    lr = gen_admm_suite("logreg", seed=1)
    from scipy.special import expit

    Z = lr.arrays["y"].ravel()[:, None] * lr.arrays["X"]
    r = rng.standard_normal(Z.shape[1])
    for t in (0.5, 2.0):
        u = lr.split.phi_prox(t, r)
        grad = -(Z.T @ expit(-(Z @ u))) + t * (u - r)
        assert np.linalg.norm(grad) <= 1e-8 * (1 + np.linalg.norm(u))


def test_suite_solutions_are_nontrivial():
    # regularization weights leave some but not all coordinates active
    from drsplit.admm import solve_admm

    for name in ("elastic_net", "lasso", "logreg"):
        p = gen_admm_suite(name, seed=2)
        res = solve_admm(p.split, method="adaptive", tol=1e-8, max_iters=10_000)
        v = res.state.v
        active = np.sum(np.abs(v) > 1e-6)
        assert 0 < active < v.size, name


def test_qp_identity_instance_has_zero_optimum():
    # Q = I, q = 0, box [-1, 1]: unconstrained optimum 0 is feasible
    from drsplit.admm import SplitProblem, solve_admm

    n = 10
    p = SplitProblem(
        phi_prox=lambda t, r: t * r / (1.0 + t),
        psi_prox=lambda t, r: np.clip(-r, -1.0, 1.0),
        D=np.eye(n),
        E=-np.eye(n),
        c=np.zeros(n),
        objective=lambda u, v: 0.5 * float(u @ u),
        dim_u=n,
        dim_v=n,
    )
    res = solve_admm(p, method="adaptive", tol=1e-8, max_iters=5000,
                     state0=None)
    assert np.linalg.norm(res.state.u) <= 1e-6


def test_elastic_net_zero_weights_reduce_to_least_squares():
    from drsplit.admm import solve_admm
    from drsplit.problems import elastic_net_split

    rng = np.random.default_rng(6)
    K = rng.standard_normal((30, 10))
    b = rng.standard_normal(30)
    p = elastic_net_split(K, b, 0.0, 0.0)
    res = solve_admm(p, method="adaptive", tol=1e-10, max_iters=20_000)
    x_star = np.linalg.solve(K.T @ K, K.T @ b)
    assert np.linalg.norm(res.state.u - x_star) <= 1e-6 * (1 + np.linalg.norm(x_star))


# -- serialization -------------------------------------------------------------------


def test_archive_roundtrip(tmp_path):
    inst = gen_linear_toy(20, 9)
    path = tmp_path / "toy.drsp"
    inst.save(path)
    name, seed, meta, blocks = load_archive(path)
    assert name == "linear_toy"
    assert seed == 9
    assert meta == {"m": 20}
    assert_allclose(blocks["A"], inst.pair.A_mat)
    assert_allclose(blocks["B"], inst.pair.B_mat)


def test_archive_rejects_bad_magic(tmp_path):
    path = tmp_path / "junk.drsp"
    path.write_bytes(b"NOTDRSPL" + b"\x00" * 16)
    with pytest.raises(ValueError):
        load_archive(path)


def test_text_matrix_roundtrip(tmp_path):
    rng = np.random.default_rng(10)
    M = rng.standard_normal((4, 7))
    path = tmp_path / "m.txt"
    write_matrix_text(path, M)
    back = read_matrix_text(path)
    assert np.array_equal(back, M)  # 17 significant digits reproduce doubles


def test_vector_saved_as_row(tmp_path):
    path = tmp_path / "v.txt"
    write_matrix_text(path, np.array([1.0, 2.5, -3.0]))
    back = read_matrix_text(path)
    assert back.shape == (1, 3)
