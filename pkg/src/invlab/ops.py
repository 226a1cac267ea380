"""Differential operators on symbolic fields and the identity suite.

Index conventions (comma denotes a partial derivative):

* ``grad_vec(u)[i, j] = u_i,j`` and ``grad_ten2(X)[i, j, k] = X_ij,k``
* ``div_ten2(Y)[i] = Y_ij,j`` and ``div_ten3(m)[i, j] = m_ijk,k``
* ``curl_vec(v)[i] = -v_a,b eps_abi``
* ``curl_ten2(X)[i, j] = -X_ia,b eps_abj``, i.e. the vector curl applied to each row

The row-wise tensor curl is defined here and nowhere else.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Dict, Iterable, Optional, Sequence

import numpy as np

from . import tensor as T
from .errors import UsageError
from .expr import Evaluator, Expr, add, as_expr, diff, diff_field, field_rank


def _append_gradient(f) -> np.ndarray:
    rank = field_rank(f)
    shape = (3,) * (rank + 1)
    out = np.empty(shape, dtype=object)
    for k in range(3):
        d = diff_field(f, k)
        if rank == 0:
            out[k] = d
        else:
            out[..., k] = d
    return out


def grad(f) -> np.ndarray:
    """Gradient of a field of any rank; the derivative index is appended last."""
    return _append_gradient(f)


def grad_scalar(phi) -> np.ndarray:
    return _append_gradient(as_expr(phi))


def grad_vec(u) -> np.ndarray:
    _expect_rank(u, 1, "grad_vec")
    return _append_gradient(u)


def grad_ten2(X) -> np.ndarray:
    _expect_rank(X, 2, "grad_ten2")
    return _append_gradient(X)


def div(f):
    """Divergence contracting the last index of a field of rank >= 1."""
    rank = field_rank(f)
    if rank < 1:
        raise UsageError("divergence needs a field of rank >= 1")
    if rank == 1:
        return add(*[diff(f[k], k) for k in range(3)])
    out = np.empty((3,) * (rank - 1), dtype=object)
    for idx in np.ndindex(out.shape):
        out[idx] = add(*[diff(f[idx + (k,)], k) for k in range(3)])
    return out


def div_vec(v) -> Expr:
    _expect_rank(v, 1, "div_vec")
    return div(v)


def div_ten2(Y) -> np.ndarray:
    _expect_rank(Y, 2, "div_ten2")
    return div(Y)


def div_ten3(m) -> np.ndarray:
    _expect_rank(m, 3, "div_ten3")
    return div(m)


def curl_vec(v) -> np.ndarray:
    _expect_rank(v, 1, "curl_vec")
    return -np.einsum("ab,abi->i", grad_vec(v), T.EPS)


def curl_ten2(X) -> np.ndarray:
    _expect_rank(X, 2, "curl_ten2")
    return -np.einsum("iab,abj->ij", grad_ten2(X), T.EPS)


def laplacian(h):
    """Trace of the second gradient, applied componentwise for non-scalar fields."""
    return div(grad(h))


def curvature(u) -> np.ndarray:
    """Curvature ``1/2 Grad(curl u)``; trace-free for every displacement field."""
    return 0.5 * grad_vec(curl_vec(u))


def curvature_via_axl(u) -> np.ndarray:
    """``Grad(axl_skew(Grad u))``, an equivalent form of :func:`curvature`."""
    return grad_vec(T.axl_skew(grad_vec(u)))


def curvature_via_curl_sym(u) -> np.ndarray:
    """``(Curl sym Grad u)^T``, an equivalent form of :func:`curvature`."""
    return T.transpose(curl_ten2(T.sym(grad_vec(u))))


def inc(S) -> np.ndarray:
    """Incompatibility ``Curl((Curl S)^T)``; vanishes on compatible strains."""
    return curl_ten2(T.transpose(curl_ten2(S)))


def dislocation_density(P) -> np.ndarray:
    return curl_ten2(P)


def _expect_rank(f, rank: int, name: str) -> None:
    if field_rank(f) != rank:
        raise UsageError(f"{name} expects a rank-{rank} field, got rank {field_rank(f)}")


# --------------------------------------------------------------------------
# residual metric

def normalized_residual(lhs, rhs) -> float:
    """``max |lhs - rhs| / (1 + max(|lhs|, |rhs|))`` over all points and components."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    scale = max(np.max(np.abs(lhs), initial=0.0), np.max(np.abs(rhs), initial=0.0))
    return float(np.max(np.abs(lhs - rhs), initial=0.0) / (1.0 + scale))


# --------------------------------------------------------------------------
# identity suite

@dataclass
class IdentityReport:
    residuals: Dict[str, float]
    tolerance: float
    fields_checked: int
    points_per_field: int

    @property
    def passed(self) -> bool:
        return all(r <= self.tolerance for r in self.residuals.values())

    def worst(self) -> float:
        return max(self.residuals.values(), default=0.0)

    def to_json(self) -> dict:
        return {"passed": self.passed, "tolerance": self.tolerance,
                "fields": self.fields_checked, "points_per_field": self.points_per_field,
                "residuals": dict(self.residuals)}


IDENTITY_NAMES = (
    "curl-grad",
    "Curl-Grad",
    "Curl-skew-Grad",
    "curvature-axl",
    "curvature-curl-sym",
    "curvature-trace",
    "Div-Curl",
    "axl-curl",
    "curvature-energies",
)


def _identity_pairs(u, curl2: Callable) -> Dict[str, tuple]:
    """Left and right hand sides of each identity for one displacement field."""
    G = grad_vec(u)
    k = curvature(u)
    zeros3 = np.zeros(3)
    zeros33 = np.zeros((3, 3))
    # a generic non-gradient tensor field assembled from u
    Xf = np.einsum("i,j->ij", u, np.array([u[1], u[2], u[0]], dtype=object)) + T.anti(u)
    curl_sym = curl2(T.sym(G))
    axl_grad = grad_vec(T.axl_skew(G))
    pairs = {
        "curl-grad": ([curl_vec(grad_scalar(u[i])) for i in range(3)], [zeros3] * 3),
        "Curl-Grad": (curl2(G), zeros33),
        "Curl-skew-Grad": (curl2(T.skew(G)), -T.transpose(axl_grad)),
        "curvature-axl": (k, axl_grad),
        "curvature-curl-sym": (k, T.transpose(curl_sym)),
        "curvature-trace": (T.tr(k), 0.0),
        "Div-Curl": (div(curl2(Xf)), zeros3),
        "axl-curl": (2.0 * T.axl_skew(G), curl_vec(u)),
        "curvature-energies": (
            [0.25 * T.inner(grad_vec(curl_vec(u)), grad_vec(curl_vec(u))), T.inner(axl_grad, axl_grad)],
            [T.inner(axl_grad, axl_grad), T.inner(curl_sym, curl_sym)],
        ),
    }
    return pairs


def _evaluate_nested(ev: Evaluator, x):
    if isinstance(x, list):
        return np.stack([_evaluate_nested(ev, p) for p in x], axis=-1)
    if isinstance(x, np.ndarray) and x.dtype != object:
        return np.broadcast_to(x, (len(ev.points),) + x.shape)
    if isinstance(x, (int, float)):
        return np.full(len(ev.points), float(x))
    return ev(np.asarray(x, dtype=object) if isinstance(x, np.ndarray) else x)


def identity_suite(corpus: Iterable, points, tolerance: float = 1e-9,
                   curl_ten2_impl: Optional[Callable] = None) -> IdentityReport:
    """Evaluate every calculus identity on each field of ``corpus`` at ``points``.

    Parameters
    ----------
    corpus : iterable of vector fields
    points : array_like, shape (N, 3) or a sequence of such arrays (one per field)
    curl_ten2_impl : callable, optional
        Replacement for the tensor curl, used to check that the suite detects
        a corrupted operator.
    """
    curl2 = curl_ten2_impl or curl_ten2
    fields = list(corpus)
    per_field = _points_per_field(points, len(fields))
    residuals = {name: 0.0 for name in IDENTITY_NAMES}
    for u, pts in zip(fields, per_field):
        ev = Evaluator(pts)
        for name, (lhs, rhs) in _identity_pairs(u, curl2).items():
            r = normalized_residual(_evaluate_nested(ev, lhs), _evaluate_nested(ev, rhs))
            residuals[name] = max(residuals[name], r)
    npts = len(per_field[0]) if per_field else 0
    return IdentityReport(residuals, tolerance, len(fields), npts)


def _points_per_field(points, n: int):
    arr = points if isinstance(points, (list, tuple)) else None
    if arr is not None and len(arr) == n and np.asarray(arr[0]).ndim == 2:
        return [np.asarray(p, dtype=float) for p in arr]
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return [pts] * n
