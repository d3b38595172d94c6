import numpy as np
import pytest
from numpy.testing import assert_allclose

from drsplit.errors import NotOrthonormal, NotSingleValued, SingularSystem
from drsplit.operators import (
    firm_nonexpansiveness_violation,
    guarded_quotient,
    l1_operator,
    least_squares_operator,
    linear_operator,
    linear_resolvent,
    operator_norm,
    project_ball_inf_pairs,
    prox_l1,
    prox_least_squares_orthorows,
    random_monotone_matrix,
    shift_operator,
    zero_operator,
)


def test_linear_resolvent_zero_matrix_is_identity():
    x = np.array([1.0, -2.0, 3.0])
    assert_allclose(linear_resolvent(np.zeros((3, 3)), 7.3, x), x)


def test_linear_resolvent_scalar():
    assert_allclose(linear_resolvent(np.array([[1.0]]), 1.0, np.array([2.0])), [1.0])


def test_linear_resolvent_skew():
    M = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert_allclose(
        linear_resolvent(M, 1.0, np.array([1.0, 0.0])), [0.5, -0.5], atol=1e-14
    )


def test_linear_resolvent_matches_brute_force_inverse():
    # 1..8 dimensional random monotone matrices against an inv-based oracle
    rng = np.random.default_rng(7)
    for dim in range(1, 9):
        for _ in range(20):
            M = random_monotone_matrix(dim, rng)
            t = float(rng.uniform(0.05, 10.0))
            x = rng.standard_normal(dim)
            z = linear_resolvent(M, t, x)
            z_oracle = np.linalg.inv(np.eye(dim) + t * M) @ x
            assert np.linalg.norm(z - z_oracle) <= 1e-10 * (1 + np.linalg.norm(x))
            residual = np.linalg.norm((np.eye(dim) + t * M) @ z - x)
            assert residual <= 1e-10 * (1 + np.linalg.norm(x))


@pytest.mark.filterwarnings("ignore::scipy.linalg.LinAlgWarning")
def test_linear_resolvent_singular_system():
    # I + tM = 0 for M = -I, t = 1
    with pytest.raises(SingularSystem):
        linear_resolvent(-np.eye(3), 1.0, np.ones(3))


def test_prox_l1_values():
    assert_allclose(prox_l1(0.5, 1.0, np.array([2.0])), [1.5])
    assert_allclose(prox_l1(0.5, 1.0, np.array([0.3])), [0.0])
    x = np.array([0.2, -3.0, 1.0])
    assert_allclose(prox_l1(0.0, 2.0, x), x)


def test_prox_least_squares_scalar():
    K = np.array([[1.0]])
    b = np.array([0.0])
    assert_allclose(prox_least_squares_orthorows(K, b, 1.0, np.array([2.0])), [1.0])


def test_prox_least_squares_fixed_point():
    rng = np.random.default_rng(0)
    K = np.linalg.qr(rng.standard_normal((6, 3)))[0].T
    b = rng.standard_normal(3)
    x = K.T @ b  # gradient vanishes there
    for t in (0.1, 1.0, 10.0):
        assert_allclose(prox_least_squares_orthorows(K, b, t, x), x, atol=1e-12)


def test_prox_least_squares_matches_generic_resolvent():
    rng = np.random.default_rng(1)
    K = np.linalg.qr(rng.standard_normal((6, 3)))[0].T
    b = rng.standard_normal(3)
    x = rng.standard_normal(6)
    for t in (0.3, 1.0, 4.0):
        fast = prox_least_squares_orthorows(K, b, t, x)
        generic = linear_resolvent(K.T @ K, t, x + t * (K.T @ b))
        assert np.linalg.norm(fast - generic) <= 1e-10


def test_least_squares_operator_rejects_nonorthonormal_rows():
    rng = np.random.default_rng(2)
    with pytest.raises(NotOrthonormal):
        least_squares_operator(rng.standard_normal((3, 6)), rng.standard_normal(3))


def test_project_ball_pairs():
    phi = np.array([3.0, 4.0])  # one pixel, channels (3, 4)
    assert_allclose(project_ball_inf_pairs(10.0, phi), [3.0, 4.0])
    assert_allclose(project_ball_inf_pairs(1.0, phi), [0.6, 0.8])
    assert_allclose(project_ball_inf_pairs(0.7, np.zeros(4)), np.zeros(4))


def test_shift_operator():
    B = linear_operator(np.eye(2))
    probe = np.array([0.4, -1.3])
    zero_shift = shift_operator(B, np.zeros(2))
    for t in (0.5, 2.0):
        assert_allclose(zero_shift.resolvent(t, probe), B.resolvent(t, probe))
    e1 = np.array([1.0, 0.0])
    shifted = shift_operator(B, e1)
    assert_allclose(shifted.resolvent(1.0, probe), (probe + e1) / 2.0)
    assert_allclose(shifted.forward(probe), B.forward(probe) - e1)


def test_shift_operator_solves_inhomogeneous_equation():
    # 0 in (A + shifted-B)x solves (A+B)x = y
    rng = np.random.default_rng(3)
    M = random_monotone_matrix(4, rng) + np.eye(4)
    B = linear_operator(M)
    y = rng.standard_normal(4)
    shifted = shift_operator(B, y)
    x_star = np.linalg.solve(M, y)  # A = 0 case
    assert_allclose(shifted.forward(x_star), np.zeros(4), atol=1e-12)


def test_operator_norm():
    assert abs(operator_norm(np.diag([3.0, 1.0])) - 3.0) <= 1e-6
    assert operator_norm(np.zeros((4, 4))) == 0.0
    assert abs(operator_norm(np.eye(5)) - 1.0) <= 1e-6


def test_guarded_quotient():
    assert guarded_quotient(0.0, 0.0) == np.inf
    assert guarded_quotient(1.0, 0.5) == 2.0
    assert guarded_quotient(1e6, 1e-14) == np.inf


def test_l1_operator_has_no_forward():
    op = l1_operator(0.5, 3)
    assert not op.single_valued
    with pytest.raises(NotSingleValued):
        op.apply_forward(np.zeros(3))


def _catalog(rng):
    M = random_monotone_matrix(5, rng)
    K = np.linalg.qr(rng.standard_normal((8, 4)))[0].T
    b = rng.standard_normal(4)
    return [
        zero_operator(5),
        linear_operator(M),
        l1_operator(0.7, 5),
        least_squares_operator(K, b),
        shift_operator(linear_operator(M), rng.standard_normal(5)),
    ]


def test_firm_nonexpansiveness_catalog():
    rng = np.random.default_rng(11)
    for op in _catalog(rng):
        worst = 0.0
        for _ in range(1000):
            x = rng.standard_normal(op.dim)
            y = rng.standard_normal(op.dim)
            t = float(rng.uniform(0.05, 10.0))
            worst = max(worst, firm_nonexpansiveness_violation(op, t, x, y))
        assert worst <= 1e-9, op.label


def test_resolvent_identity_single_valued():
    rng = np.random.default_rng(12)
    for op in _catalog(rng):
        if not op.single_valued:
            continue
        for t in (0.1, 1.0, 10.0):
            y = rng.standard_normal(op.dim)
            u = op.resolvent(t, y)
            gap = np.linalg.norm(t * op.apply_forward(u) - (y - u))
            assert gap <= 1e-9 * (1 + np.linalg.norm(y)), op.label


def test_resolvent_identity_from_forward_composition():
    # resolvent(t, x + t*forward(x)) = x for single-valued operators
    rng = np.random.default_rng(13)
    for op in _catalog(rng):
        if not op.single_valued:
            continue
        x = rng.standard_normal(op.dim)
        for t in (0.1, 1.0, 10.0):
            back = op.resolvent(t, x + t * op.apply_forward(x))
            assert np.linalg.norm(back - x) <= 1e-9 * (1 + np.linalg.norm(x))


def test_linear_operator_cache_consistency():
    rng = np.random.default_rng(14)
    M = random_monotone_matrix(6, rng)
    op = linear_operator(M)
    x = rng.standard_normal(6)
    # repeated and interleaved stepsizes must reuse/refresh factorizations
    # without changing results
    first = {t: op.resolvent(t, x) for t in (0.5, 1.0, 2.0)}
    for t in (2.0, 0.5, 1.0):
        assert_allclose(op.resolvent(t, x), first[t])
        assert_allclose(op.resolvent(t, x), linear_resolvent(M, t, x))
