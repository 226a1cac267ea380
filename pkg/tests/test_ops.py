import numpy as np
import pytest
from hypothesis import given, strategies as st

from invlab import ops
from invlab.errors import UsageError
from invlab.expr import X, constant_field, evaluate, field, random_polynomial_field, sample_points
from invlab.tensor import EPS, axl_skew, skew, sym, transpose

from oracles import curl_of_gradient, fd_gradient, fd_hessian, inc_from_hessian

x1, x2, x3 = X
P = np.array([1.0, 2.0, 3.0])
U = field([x1 * x2, x3 ** 2, x1])
seeds = st.integers(0, 10_000)


def corpus_field(seed, shape=(3,)):
    return random_polynomial_field(3, (-2, 2), seed, shape=shape)


# --- gradients and divergences

def test_grad_hand_values():
    np.testing.assert_array_equal(evaluate(ops.grad_scalar(x1), P), [1, 0, 0])
    np.testing.assert_array_equal(evaluate(ops.grad_scalar(x1 * x2), P), [2, 1, 0])
    np.testing.assert_array_equal(evaluate(ops.grad_vec(U), P), [[2, 1, 0], [0, 0, 6], [1, 0, 0]])
    assert np.all(evaluate(ops.grad_vec(constant_field([1, 2, 3])), P) == 0)
    assert np.all(evaluate(ops.grad_ten2(constant_field(np.eye(3))), P) == 0)


def test_div_hand_values(rng):
    pts = sample_points(4, rng)
    np.testing.assert_allclose(evaluate(ops.div_vec(U), pts), pts[:, 1])
    assert np.all(evaluate(ops.div_ten2(constant_field(np.eye(3))), pts) == 0)


def test_rank_checks():
    with pytest.raises(UsageError):
        ops.grad_vec(field(np.eye(3).tolist()))
    with pytest.raises(UsageError):
        ops.div(x1)
    with pytest.raises(UsageError):
        ops.curl_ten2(U)


@given(seeds)
def test_grad_ten2_matches_finite_differences(seed):
    Xf = corpus_field(seed, (3, 3))
    p = np.random.default_rng(seed).uniform(-1, 1, 3)
    np.testing.assert_allclose(evaluate(ops.grad_ten2(Xf), p), fd_gradient(Xf, p), atol=1e-6)


@given(seeds)
def test_second_gradient_is_symmetric_and_matches_div(seed):
    u = corpus_field(seed)
    pts = sample_points(5, np.random.default_rng(seed))
    H = evaluate(ops.grad_ten2(ops.grad_vec(u)), pts)
    np.testing.assert_allclose(H, np.swapaxes(H, -1, -2), atol=1e-12)
    lhs = evaluate(ops.div_ten3(ops.grad_ten2(ops.grad_vec(u))), pts)
    rhs = evaluate(ops.grad_vec(ops.div_ten2(ops.grad_vec(u))), pts)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


# --- curls

def test_curl_vec_hand_values(rng):
    pts = sample_points(4, rng)
    c = evaluate(ops.curl_vec(field([x2 ** 2, 0, 0])), pts)
    np.testing.assert_allclose(c, np.stack([0 * pts[:, 0], 0 * pts[:, 0], -2 * pts[:, 1]], axis=1))
    np.testing.assert_allclose(evaluate(ops.curl_vec(U), P), [-2 * 3, -1, -1])


def test_curl_ten2_of_sym_grad_hand_values():
    # entries obtained from the row-wise definition -X_{ia,b} eps_abj
    got = evaluate(ops.curl_ten2(sym(ops.grad_vec(U))), P)
    expected = np.zeros((3, 3))
    expected[0, 2] = -0.5
    expected[2, 0] = -1.0
    np.testing.assert_allclose(got, expected, atol=1e-15)


@given(seeds)
def test_curl_ten2_matches_finite_differences(seed):
    Pf = corpus_field(seed, (3, 3))
    p = np.random.default_rng(seed).uniform(-1, 1, 3)
    np.testing.assert_allclose(evaluate(ops.dislocation_density(Pf), p),
                               curl_of_gradient(fd_gradient(Pf, p)), atol=1e-6)


@given(seeds)
def test_curl_relations(seed):
    u = corpus_field(seed)
    pts = sample_points(5, np.random.default_rng(seed))
    G = ops.grad_vec(u)
    np.testing.assert_allclose(evaluate(ops.curl_vec(ops.grad_scalar(u[0])), pts), 0, atol=1e-12)
    np.testing.assert_allclose(evaluate(ops.dislocation_density(G), pts), 0, atol=1e-12)
    np.testing.assert_allclose(evaluate(2 * axl_skew(G), pts), evaluate(ops.curl_vec(u), pts),
                               atol=1e-12)
    np.testing.assert_allclose(evaluate(ops.dislocation_density(skew(G)), pts),
                               evaluate(-transpose(ops.grad_vec(axl_skew(G))), pts), atol=1e-12)
    Xf = corpus_field(seed + 1, (3, 3))
    np.testing.assert_allclose(evaluate(ops.div_ten2(ops.curl_ten2(Xf)), pts), 0, atol=1e-11)


# --- curvature

def test_curvature_hand_values():
    expected = np.zeros((3, 3))
    expected[0, 2] = -1.0
    expected[2, 0] = -0.5
    for fn in (ops.curvature, ops.curvature_via_axl, ops.curvature_via_curl_sym):
        np.testing.assert_allclose(evaluate(fn(U), P), expected, atol=1e-15)
    k = evaluate(ops.curvature(field([x2 ** 3, 0, 0])), [0.0, 1.0, 0.0])
    assert k[2, 1] == pytest.approx(-3.0)
    assert np.count_nonzero(k) == 1


@given(seeds)
def test_curvature_of_gradient_field_is_trace_free(seed):
    phi = corpus_field(seed, ())
    u = ops.grad_scalar(phi * phi)
    pts = sample_points(5, np.random.default_rng(seed))
    np.testing.assert_allclose(np.trace(evaluate(ops.curvature(u), pts), axis1=1, axis2=2), 0,
                               atol=1e-11)


def test_laplacian_of_vector_field(rng):
    u = field([x1 ** 2 * x2, x3 ** 3, 0])
    pts = sample_points(3, rng)
    got = evaluate(ops.laplacian(u), pts)
    np.testing.assert_allclose(got[:, 0], 2 * pts[:, 1])
    np.testing.assert_allclose(got[:, 1], 6 * pts[:, 2])


# --- incompatibility

def test_inc_hand_value():
    S = field([[x2 ** 2, 0, 0], [0, 0, 0], [0, 0, 0]])
    expected = np.zeros((3, 3))
    expected[2, 2] = 2.0
    np.testing.assert_allclose(evaluate(ops.inc(S), [0.3, -0.7, 0.2]), expected)
    assert np.all(evaluate(ops.inc(constant_field(np.eye(3))), P) == 0)


@given(seeds)
def test_inc_vanishes_on_compatible_strain(seed):
    u = corpus_field(seed)
    pts = sample_points(5, np.random.default_rng(seed))
    np.testing.assert_allclose(evaluate(ops.inc(sym(ops.grad_vec(u))), pts), 0, atol=1e-11)


@given(seeds)
def test_inc_matches_finite_differences(seed):
    S = sym(corpus_field(seed, (3, 3)))
    p = np.random.default_rng(seed).uniform(-1, 1, 3)
    np.testing.assert_allclose(evaluate(ops.inc(S), p), inc_from_hessian(fd_hessian(S, p)),
                               atol=1e-7)


# --- identity suite

def test_identity_suite_passes_on_corpus():
    rng = np.random.default_rng(42)
    corpus = [random_polynomial_field(3, (-2, 2), rng) for _ in range(10)]
    report = ops.identity_suite(corpus, [sample_points(10, rng) for _ in corpus])
    assert report.passed, report.residuals
    assert set(report.residuals) == set(ops.IDENTITY_NAMES)
    assert report.fields_checked == 10 and report.points_per_field == 10


def test_identity_suite_single_field():
    report = ops.identity_suite([field([x2 ** 3, 0, 0])], sample_points(10, np.random.default_rng(0)))
    assert report.passed and report.worst() <= 1e-12


def test_identity_suite_detects_corrupted_curl():
    def flipped(Xf):
        return np.einsum("iab,abj->ij", ops.grad_ten2(Xf), EPS)

    rng = np.random.default_rng(42)
    corpus = [random_polynomial_field(3, (-2, 2), rng) for _ in range(3)]
    report = ops.identity_suite(corpus, sample_points(10, rng), curl_ten2_impl=flipped)
    assert not report.passed
    assert report.worst() > 0.1
    assert report.to_json()["passed"] is False


def test_normalized_residual():
    assert ops.normalized_residual([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert ops.normalized_residual([0.0], [1.0]) == pytest.approx(0.5)
