import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from invlab.errors import PreconditionError, UsageError
from invlab.tensor import (EPS, IDENTITY, Rotation, anti, axl, axl_skew, cartan_decompose,
                           cross, dev, inner, is_skew, is_sym, is_tracefree, levi_civita_identity_check,
                           quaternion_matrix, random_rotation, rayleigh,
                           rotation_from_integer_quaternion, skew, sym, tr)

from oracles import levi_civita_bruteforce, quaternion_via_axis_angle

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
mat3 = arrays(np.float64, (3, 3), elements=finite)
vec3 = arrays(np.float64, (3,), elements=finite)
int_quat = st.lists(st.integers(-5, 5), min_size=4, max_size=4).filter(any)


def e(i, j):
    m = np.zeros((3, 3))
    m[i, j] = 1.0
    return m


# --- permutation symbol and inner product

def test_eps_matches_bruteforce():
    np.testing.assert_array_equal(EPS, levi_civita_bruteforce())
    assert not EPS.flags.writeable


def test_inner_hand_values(rng):
    assert inner(IDENTITY, IDENTITY) == 3.0
    assert inner(EPS, EPS) == 6.0
    for _ in range(10):
        X, Y = rng.normal(size=(2, 3, 3))
        assert inner(X, Y) == pytest.approx(np.trace(X @ Y.T), abs=1e-12)


def test_inner_rank_mismatch():
    with pytest.raises(UsageError):
        inner(np.zeros(3), np.zeros((3, 3)))


# --- Cartan decomposition

def test_cartan_hand_values():
    p = cartan_decompose(IDENTITY)
    assert np.all(p.devsym == 0) and np.all(p.skew == 0) and p.spherical == 1.0
    A = anti([0.0, 0.0, 1.0])
    p = cartan_decompose(A)
    np.testing.assert_array_equal(p.skew, A)
    assert np.all(p.devsym == 0) and p.spherical == 0.0
    p = cartan_decompose(e(0, 1))
    np.testing.assert_array_equal(p.devsym, 0.5 * (e(0, 1) + e(1, 0)))
    np.testing.assert_array_equal(p.skew, 0.5 * (e(0, 1) - e(1, 0)))
    assert p.spherical == 0.0


@given(mat3)
def test_cartan_reconstructs_and_is_orthogonal(X):
    p = cartan_decompose(X)
    scale = 1.0 + np.max(np.abs(X))
    assert np.max(np.abs(p.reconstruct() - X)) <= 1e-14 * scale
    sph = p.spherical * IDENTITY
    for a, b in ((p.devsym, p.skew), (p.devsym, sph), (p.skew, sph)):
        assert abs(inner(a, b)) <= 1e-12 * scale ** 2
    assert is_sym(p.devsym) and is_tracefree(p.devsym) and is_skew(p.skew)


def test_predicates_and_parts():
    X = np.arange(9.0).reshape(3, 3)
    assert is_sym(sym(X)) and is_skew(skew(X)) and is_tracefree(dev(X))
    assert not is_sym(X) and not is_skew(X)
    assert tr(X) == 12.0


# --- axial vectors

def test_anti_rows():
    a1, a2, a3 = 1.0, 2.0, 3.0
    np.testing.assert_array_equal(anti([a1, a2, a3]),
                                  [[0, -a3, a2], [a3, 0, -a1], [-a2, a1, 0]])


def test_axl_hand_values():
    np.testing.assert_array_equal(axl(anti([1.0, 2.0, 3.0])), [1, 2, 3])
    np.testing.assert_array_equal(axl(skew(e(0, 1))), [0, 0, -0.5])
    np.testing.assert_array_equal(axl_skew(e(0, 1)), [0, 0, -0.5])
    np.testing.assert_array_equal(axl_skew(e(0, 1) + e(1, 0)), [0, 0, 0])


def test_axl_rejects_non_skew():
    with pytest.raises(PreconditionError):
        axl(e(0, 1))


@given(vec3, vec3)
def test_anti_is_cross_product(a, v):
    assert np.max(np.abs(anti(a) @ v - cross(a, v))) <= 1e-14 * (1 + np.abs(a).max() * np.abs(v).max())


@given(mat3)
def test_anti_axl_round_trip(X):
    A = skew(X)
    np.testing.assert_allclose(anti(axl(A)), A, atol=1e-12)
    np.testing.assert_allclose(axl_skew(X), axl(A), atol=1e-12)


def test_batched_helpers_match_loop(rng):
    Xs = rng.normal(size=(5, 3, 3))
    np.testing.assert_allclose(axl_skew(Xs), [axl_skew(X) for X in Xs])
    np.testing.assert_allclose(anti(Xs[:, 0]), [anti(x) for x in Xs[:, 0]])


# --- rotations

def test_quaternion_hand_values():
    np.testing.assert_array_equal(rotation_from_integer_quaternion((1, 0, 0, 0)).matrix, IDENTITY)
    np.testing.assert_allclose(rotation_from_integer_quaternion((1, 1, 0, 0)).matrix,
                               [[1, 0, 0], [0, 0, -1], [0, 1, 0]], atol=1e-15)
    np.testing.assert_array_equal(rotation_from_integer_quaternion((2, 1, 0, 0)).matrix,
                                  rotation_from_integer_quaternion((-2, -1, 0, 0)).matrix)


@given(int_quat)
def test_quaternion_matches_axis_angle_oracle(q):
    R = rotation_from_integer_quaternion(q).matrix
    np.testing.assert_allclose(R, quaternion_via_axis_angle(q), atol=1e-12)
    assert np.max(np.abs(R.T @ R - IDENTITY)) <= 1e-14
    assert abs(np.linalg.det(R) - 1.0) <= 1e-14


def test_quaternion_errors():
    with pytest.raises(UsageError):
        rotation_from_integer_quaternion((0, 0, 0, 0))
    with pytest.raises(UsageError):
        rotation_from_integer_quaternion((1, 0.5, 0, 0))
    with pytest.raises(UsageError):
        quaternion_matrix((0, 0, 0, 0))


def test_rotation_validation():
    with pytest.raises(PreconditionError):
        Rotation(2 * IDENTITY)
    with pytest.raises(PreconditionError):
        Rotation(np.diag([1.0, 1.0, -1.0]))


def test_rotation_transpose_inverts_quaternion():
    Q = rotation_from_integer_quaternion((1, 2, 2, 0))
    np.testing.assert_allclose(Q.T.matrix, Q.matrix.T)
    assert Q.T.quaternion == (1, -2, -2, 0)
    np.testing.assert_allclose(rotation_from_integer_quaternion(Q.T.quaternion).matrix, Q.matrix.T,
                               atol=1e-15)


def test_about_axis_quarter_turn():
    R = Rotation.about_axis([0, 0, 1], np.pi / 2).matrix
    np.testing.assert_allclose(R, [[0, -1, 0], [1, 0, 0], [0, 0, 1]], atol=1e-15)


def test_random_rotation_is_reproducible():
    a = random_rotation(np.random.default_rng(3))
    b = random_rotation(np.random.default_rng(3))
    assert a.quaternion == b.quaternion
    assert all(-5 <= c <= 5 for c in a.quaternion)


# --- Rayleigh product and permutation-symbol identities

def test_rayleigh_hand_values():
    Q = Rotation.about_axis([0, 0, 1], np.pi / 2)
    np.testing.assert_allclose(rayleigh(Q, IDENTITY), IDENTITY, atol=1e-15)
    triad = np.einsum("i,j,k->ijk", *np.eye(3))
    d1, d2, e3 = np.array([0, 1, 0.0]), np.array([-1, 0, 0.0]), np.array([0, 0, 1.0])
    np.testing.assert_allclose(rayleigh(Q, triad), np.einsum("i,j,k->ijk", d1, d2, e3), atol=1e-15)
    np.testing.assert_allclose(rayleigh(Q, EPS), EPS, atol=1e-15)


@given(int_quat, arrays(np.float64, (3, 3, 3), elements=finite))
def test_rayleigh_round_trip(q, T):
    Q = rotation_from_integer_quaternion(q)
    for t in (T, T[0], T[0, 0]):
        np.testing.assert_allclose(rayleigh(Q, rayleigh(Q.T, t)), t, atol=1e-12 * (1 + np.abs(T).max()))


def test_rayleigh_unsupported_rank():
    with pytest.raises(UsageError):
        rayleigh(IDENTITY, np.zeros((3,) * 4))


def test_levi_civita_check_hand_values():
    assert levi_civita_identity_check(Rotation.identity()) == 0.0
    assert levi_civita_identity_check(rotation_from_integer_quaternion((1, 2, 2, 0))) <= 1e-12
    assert levi_civita_identity_check(2 * IDENTITY) == pytest.approx(7.0)


@given(int_quat)
def test_levi_civita_check_on_rotations(q):
    assert levi_civita_identity_check(rotation_from_integer_quaternion(q)) <= 1e-12
