"""Pointwise tensor algebra in three dimensions.

Every helper accepts plain float arrays with optional leading batch axes
(``(..., 3)``, ``(..., 3, 3)``, ``(..., 3, 3, 3)``).  Most of them also work
on ``object`` arrays whose entries are symbolic expressions, which is how
the field operators reuse the same algebra.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .errors import PreconditionError, UsageError

PREDICATE_TOL = 1e-10
ROTATION_TOL = 1e-12


def _permutation_sign(perm: Sequence[int]) -> int:
    sign = 1
    p = list(perm)
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                sign = -sign
    return sign


def _build_levi_civita() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for perm in itertools.permutations(range(3)):
        eps[perm] = _permutation_sign(perm)
    eps.setflags(write=False)
    return eps


#: Permutation symbol, ``EPS[i, j, k] = +1`` for even permutations of (0, 1, 2).
EPS = _build_levi_civita()
IDENTITY = np.eye(3)
IDENTITY.setflags(write=False)


# --------------------------------------------------------------------------
# inner products and the Cartan split

def inner(a, b) -> float:
    """Full contraction of two tensors of equal rank (1, 2 or 3).

    Parameters
    ----------
    a, b : array_like
        Unbatched tensors of identical shape ``(3,)``, ``(3, 3)`` or
        ``(3, 3, 3)``.

    Returns
    -------
    float
        Sum over all indices of componentwise products.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim not in (1, 2, 3) or a.shape != (3,) * a.ndim:
        raise UsageError(f"inner: unsupported tensor shape {a.shape}")
    if a.shape != b.shape:
        raise UsageError(f"inner: rank mismatch {a.shape} vs {b.shape}")
    return np.sum(a * b)


def norm2(x, rank: int):
    """Squared Frobenius norm over the trailing ``rank`` axes (batch aware)."""
    x = np.asarray(x)
    return np.sum(x * x, axis=tuple(range(-rank, 0)))


def transpose(X):
    return np.swapaxes(X, -1, -2)


def sym(X):
    X = np.asarray(X)
    return 0.5 * (X + transpose(X))


def skew(X):
    X = np.asarray(X)
    return 0.5 * (X - transpose(X))


def tr(X):
    X = np.asarray(X)
    return np.asarray(X[..., 0, 0] + X[..., 1, 1] + X[..., 2, 2])


def spherical(X):
    """Spherical part ``tr(X)/3 * id``."""
    return np.asarray(tr(X) / 3.0)[..., None, None] * IDENTITY


def dev(X):
    X = np.asarray(X)
    return X - spherical(X)


def is_sym(X, tol: float = PREDICATE_TOL) -> bool:
    X = np.asarray(X, dtype=float)
    return bool(np.all(np.abs(X - transpose(X)) <= tol))


def is_skew(X, tol: float = PREDICATE_TOL) -> bool:
    X = np.asarray(X, dtype=float)
    return bool(np.all(np.abs(X + transpose(X)) <= tol))


def is_tracefree(X, tol: float = PREDICATE_TOL) -> bool:
    return bool(np.all(np.abs(np.asarray(tr(X), dtype=float)) <= tol))


@dataclass(frozen=True)
class CartanParts:
    """Trace-free symmetric, skew and spherical parts of a 3x3 tensor."""

    devsym: np.ndarray
    skew: np.ndarray
    spherical: float

    def reconstruct(self) -> np.ndarray:
        return self.devsym + self.skew + self.spherical * IDENTITY


def cartan_decompose(X) -> CartanParts:
    X = np.asarray(X, dtype=float)
    if X.shape != (3, 3):
        raise UsageError(f"cartan_decompose expects a 3x3 matrix, got {X.shape}")
    return CartanParts(devsym=dev(sym(X)), skew=skew(X), spherical=float(tr(X)) / 3.0)


# --------------------------------------------------------------------------
# axial vectors

def anti(a):
    """Skew matrix with ``anti(a) @ v == cross(a, v)``; entries ``-eps_ijk a_k``."""
    a = np.asarray(a)
    return -np.einsum("ijk,...k->...ij", EPS, a)


def axl_skew(X):
    """Axial vector of the skew part of ``X``: ``-1/2 X_ab eps_abk``."""
    X = np.asarray(X)
    return -0.5 * np.einsum("...ab,abk->...k", X, EPS)


def axl(A, tol: float = PREDICATE_TOL):
    """Axial vector of a skew matrix.

    Raises
    ------
    PreconditionError
        If ``A + A^T`` is not zero within ``tol``.
    """
    A = np.asarray(A, dtype=float)
    if not is_skew(A, tol):
        raise PreconditionError("axl requires a skew-symmetric matrix")
    return axl_skew(A)


def cross(a, b):
    return np.cross(np.asarray(a), np.asarray(b))


# --------------------------------------------------------------------------
# rotations

@dataclass(frozen=True)
class Rotation:
    """A proper orthogonal 3x3 matrix.

    The optional ``quaternion`` records the integer quaternion the rotation
    was built from, so reports can serialize it exactly.
    """

    matrix: np.ndarray
    quaternion: Optional[tuple] = field(default=None, compare=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (3, 3) or not np.all(np.isfinite(m)):
            raise PreconditionError("rotation matrix must be a finite 3x3 array")
        if np.max(np.abs(m.T @ m - IDENTITY)) > ROTATION_TOL:
            raise PreconditionError("matrix is not orthogonal")
        if abs(np.linalg.det(m) - 1.0) > ROTATION_TOL:
            raise PreconditionError("matrix is not a proper rotation (det != +1)")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def T(self) -> "Rotation":
        q = self.quaternion
        inv = None if q is None else (q[0], -q[1], -q[2], -q[3])
        return Rotation(self.matrix.T.copy(), inv)

    @classmethod
    def identity(cls) -> "Rotation":
        return cls(np.eye(3), (1, 0, 0, 0))

    @classmethod
    def about_axis(cls, axis, angle: float) -> "Rotation":
        """Rodrigues rotation by ``angle`` radians about the (normalized) ``axis``."""
        n = np.asarray(axis, dtype=float)
        n = n / np.linalg.norm(n)
        K = anti(n)
        return cls(IDENTITY + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K))


def as_matrix(Q) -> np.ndarray:
    return Q.matrix if isinstance(Q, Rotation) else np.asarray(Q, dtype=float)


def quaternion_matrix(q) -> np.ndarray:
    """Rotation matrix of a (not necessarily unit) quaternion ``(w, x, y, z)``."""
    w, x, y, z = (float(c) for c in q)
    n = w * w + x * x + y * y + z * z
    if n == 0.0:
        raise UsageError("quaternion must not be zero")
    return np.array([
        [w * w + x * x - y * y - z * z, 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), w * w - x * x + y * y - z * z, 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), w * w - x * x - y * y + z * z],
    ]) / n


def rotation_from_integer_quaternion(q: Sequence[int]) -> Rotation:
    """Rotation with rational entries from an integer quaternion ``(w, x, y, z)``."""
    if len(q) != 4 or any(int(c) != c for c in q):
        raise UsageError("quaternion must consist of four integers")
    q = tuple(int(c) for c in q)
    if not any(q):
        raise UsageError("quaternion must not be zero")
    return Rotation(quaternion_matrix(q), q)


def random_rotation(rng: np.random.Generator, bound: int = 5) -> Rotation:
    """Sample an integer quaternion with components in ``[-bound, bound]``."""
    while True:
        q = tuple(int(c) for c in rng.integers(-bound, bound + 1, size=4))
        if any(q):
            return rotation_from_integer_quaternion(q)


def rayleigh(Q, T, rank: Optional[int] = None):
    """Rotate every leg of ``T``: ``Q T Q^T`` for rank 2, ``Q_ia Q_jb Q_kc T_abc`` for rank 3.

    ``rank`` defaults to ``T.ndim``; pass it explicitly for batched input.
    """
    Q = as_matrix(Q)
    T = np.asarray(T)
    rank = T.ndim if rank is None else rank
    if rank == 0:
        return T
    if rank == 1:
        return np.einsum("ia,...a->...i", Q, T)
    if rank == 2:
        return np.einsum("ia,jb,...ab->...ij", Q, Q, T)
    if rank == 3:
        return np.einsum("ia,jb,kc,...abc->...ijk", Q, Q, Q, T)
    raise UsageError(f"rayleigh: unsupported rank {rank}")


def levi_civita_identity_check(Q: Union[Rotation, np.ndarray]) -> float:
    """Largest residual of the three rotation identities of the permutation symbol.

    Checks ``eps = Q*eps``, ``eps = Q^T*eps`` and
    ``Q_mi eps_ibc = Q_jb Q_kc eps_jkm``.  Accepts a raw matrix so that the
    check can be exercised on non-rotations.
    """
    Q = as_matrix(Q)
    r1 = np.max(np.abs(EPS - rayleigh(Q, EPS)))
    r2 = np.max(np.abs(EPS - rayleigh(Q.T, EPS)))
    lhs = np.einsum("mi,ibc->mbc", Q, EPS)
    rhs = np.einsum("jb,kc,jkm->mbc", Q, Q, EPS)
    r3 = np.max(np.abs(lhs - rhs))
    return float(max(r1, r2, r3))
