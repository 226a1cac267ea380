"""Coordinate rotations of fields and the catalog of transformation rules.

``sharp`` rotates spatial and referential coordinates together,
``u#(xi) = Q u(Q^T xi)``, with one ``Q`` per tensor leg.  ``flat`` rotates the
referential coordinates only.  Every rule in :data:`RULES` states that an
operator applied to the rotated field equals the rotated operator result,
compared at mapped point pairs ``xi = Q x``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np

from . import ops
from . import tensor as T
from .errors import UsageError
from .expr import (Evaluator, Expr, RotationField, compose_linear, expand_polynomials,
                   field_rank, X)
from .tensor import Rotation

RotationLike = Union[Rotation, RotationField]


def _constant_rotation(Q, what: str) -> Rotation:
    if isinstance(Q, RotationField):
        if Q.constant is None:
            raise UsageError(
                f"{what} needs a constant rotation: a rotation field whose gradient is "
                "a rotation everywhere is necessarily rigid, so spatially varying "
                "rotations do not arise from coordinate changes (compatibility of rotations)")
        return Q.constant
    if isinstance(Q, Rotation):
        return Q
    return Rotation(np.asarray(Q, dtype=float))


def sharp(f, Q):
    """Rotate a field of rank 0-3 together with its argument.

    Rank ``r`` components become ``Q_ia Q_jb ... f_ab...(Q^T xi)``.
    """
    Q = _constant_rotation(Q, "sharp")
    g = compose_linear(f, Q, expand=False)
    rank = field_rank(f)
    if rank > 0:
        g = T.rayleigh(Q, g, rank=rank)
    return expand_polynomials(g)


def flat(f, Q):
    """Referential-only rotation ``phi(Q^T xi)``."""
    Q = _constant_rotation(Q, "flat")
    return compose_linear(f, Q)


# --------------------------------------------------------------------------
# rule catalog

@dataclass(frozen=True)
class Rule:
    id: str
    input_rank: int
    output_rank: int
    lhs: Callable
    rhs: Callable
    summary: str

    def describe(self) -> str:
        return f"{self.id}: {self.summary}"


def _same(op, input_rank, output_rank, summary):
    return dict(input_rank=input_rank, output_rank=output_rank, lhs=op, rhs=op, summary=summary)


G = ops.grad_vec
_Div = ops.div
_Curl = ops.curl_ten2


def _catalog() -> Dict[str, Rule]:
    entries = {
        "grad": _same(G, 1, 2, "Grad u# = Q (Grad u) Q^T"),
        "div-invariance": _same(ops.div_vec, 1, 0, "div u# = div u"),
        "Div-Grad": _same(lambda u: _Div(G(u)), 1, 1, "Div Grad u# = Q Div Grad u"),
        "sym-Grad": _same(lambda u: T.sym(G(u)), 1, 2, "sym Grad u# = Q (sym Grad u) Q^T"),
        "skew-Grad": _same(lambda u: T.skew(G(u)), 1, 2, "skew Grad u# = Q (skew Grad u) Q^T"),
        "dev-sym": _same(lambda u: T.dev(T.sym(G(u))), 1, 2, "dev sym Grad u# = Q (dev sym Grad u) Q^T"),
        "Div-sym": _same(lambda u: _Div(T.sym(G(u))), 1, 1, "Div sym Grad u# = Q Div sym Grad u"),
        "Div-skew": _same(lambda u: _Div(T.skew(G(u))), 1, 1, "Div skew Grad u# = Q Div skew Grad u"),
        "axl": _same(lambda u: T.axl_skew(G(u)), 1, 1, "axl skew Grad u# = Q axl skew Grad u"),
        "anti": _same(T.anti, 1, 2, "anti(u#) = Q anti(u) Q^T"),
        "curl": _same(ops.curl_vec, 1, 1, "curl u# = Q curl u"),
        "Grad-curl": _same(lambda u: G(ops.curl_vec(u)), 1, 2, "Grad curl u# = Q (Grad curl u) Q^T"),
        "curvature": _same(ops.curvature, 1, 2, "curvature(u#) = Q curvature(u) Q^T"),
        "laplace-vector": _same(ops.laplacian, 1, 1, "Laplacian u# = Q Laplacian u"),
        "GRAD-Grad-u": _same(lambda u: ops.grad(G(u)), 1, 3, "GRAD Grad u# = Q*(GRAD Grad u)"),
        "DIV-GRAD-Grad-u": dict(
            input_rank=1, output_rank=2,
            lhs=lambda u: _Div(ops.grad(G(u))),
            rhs=lambda u: G(_Div(G(u))),
            summary="DIV GRAD Grad u# = Q (Grad Div Grad u) Q^T"),
        "Div-DIV-GRAD-Grad-u": dict(
            input_rank=1, output_rank=1,
            lhs=lambda u: _Div(_Div(ops.grad(G(u)))),
            rhs=lambda u: _Div(G(_Div(G(u)))),
            summary="Div DIV GRAD Grad u# = Q Div Grad Div Grad u"),
        "Div-sigma": _same(_Div, 2, 1, "Div sigma# = Q Div sigma"),
        "GRAD-sigma": _same(ops.grad, 2, 3, "GRAD sigma# = Q*(GRAD sigma)"),
        "DIV-GRAD-sigma": _same(lambda s: _Div(ops.grad(s)), 2, 2, "DIV GRAD sigma# = Q (DIV GRAD sigma) Q^T"),
        "Grad-Div-sigma": _same(lambda s: G(_Div(s)), 2, 2, "Grad Div sigma# = Q (Grad Div sigma) Q^T"),
        "Curl-P": _same(_Curl, 2, 2, "Curl P# = Q (Curl P) Q^T"),
        "Curl-Curl": _same(lambda s: _Curl(_Curl(s)), 2, 2, "Curl Curl sigma# = Q (Curl Curl sigma) Q^T"),
        "inc": _same(lambda P: ops.inc(T.sym(P)), 2, 2, "inc(sym P#) = Q inc(sym P) Q^T"),
        "dislocation": _same(ops.dislocation_density, 2, 2, "Curl P# = Q (Curl P) Q^T for a plastic distortion P"),
        "laplace": _same(ops.laplacian, 0, 0, "Laplacian h# = Laplacian h"),
    }
    return {k: Rule(id=k, **v) for k, v in entries.items()}


RULES: Dict[str, Rule] = _catalog()


def get_rule(rule_id: str) -> Rule:
    try:
        return RULES[rule_id]
    except KeyError:
        raise UsageError(f"unknown rule {rule_id!r}; known rules: {', '.join(RULES)}") from None


def verify_rule(rule_id: str, f, Q: RotationLike, points, sharp_field=None) -> float:
    """Largest componentwise difference between both sides of a rule.

    The left side applies the operator to ``sharp(f, Q)`` and is evaluated at
    ``Q x``; the right side rotates the operator result on ``f`` evaluated at
    ``x``.  A precomputed ``sharp_field`` may be passed to share work across
    rules.
    """
    rule = get_rule(rule_id)
    Q = _constant_rotation(Q, f"rule {rule_id!r}")
    if field_rank(f) != rule.input_rank:
        raise UsageError(f"rule {rule_id!r} expects a rank-{rule.input_rank} field, "
                         f"got rank {field_rank(f)}")
    x = np.atleast_2d(np.asarray(points, dtype=float))
    xi = x @ Q.matrix.T
    fs = sharp(f, Q) if sharp_field is None else sharp_field
    lhs = Evaluator(xi)(rule.lhs(fs))
    rhs = T.rayleigh(Q, Evaluator(x)(rule.rhs(f)), rank=rule.output_rank)
    return float(np.max(np.abs(lhs - rhs)))


def verify_catalog(fields: Dict[int, object], Q: RotationLike, points,
                   rule_ids=None) -> Dict[str, float]:
    """Run many rules for one rotation; ``fields`` maps input rank to a field."""
    Q = _constant_rotation(Q, "rule catalog")
    ids = list(RULES) if rule_ids is None else list(rule_ids)
    sharps = {}
    out = {}
    for rid in ids:
        rule = get_rule(rid)
        if rule.input_rank not in fields:
            continue
        f = fields[rule.input_rank]
        if rule.input_rank not in sharps:
            sharps[rule.input_rank] = sharp(f, Q)
        out[rid] = verify_rule(rid, f, Q, points, sharp_field=sharps[rule.input_rank])
    return out


# --------------------------------------------------------------------------
# local compositions with rotation fields

def _rotation_matrix_field(Qf: RotationLike) -> np.ndarray:
    if isinstance(Qf, Rotation):
        Qf = RotationField.from_rotation(Qf)
    return Qf.matrix_field()


def left_local_compose(Qf: RotationLike, F) -> np.ndarray:
    """The tensor field ``Q(x) F(x)``."""
    return np.einsum("ij,jk->ik", _rotation_matrix_field(Qf), F)


def left_local_args(F, Qf: RotationLike) -> Tuple[np.ndarray, np.ndarray]:
    """First and second gradient slots after left multiplication by ``Q(x)``."""
    QF = left_local_compose(Qf, F)
    return QF, ops.grad(QF)


def right_local_args(F, Qf: RotationLike) -> Tuple[np.ndarray, np.ndarray]:
    """First and second gradient slots after a right-local rotation ``R(x)``.

    Returns ``F R`` and ``H'`` with
    ``H'_ijk = H_iml R_mj R_lk + F_im (d_l R_mj) R_lk``, where ``H = GRAD F``.
    For constant ``R`` this is the right-global transform ``H R R``.
    """
    R = _rotation_matrix_field(Qf)
    FR = np.einsum("im,mj->ij", F, R)
    H = ops.grad(F)
    first = np.einsum("iml,mj,lk->ijk", H, R, R)
    dR = ops.grad(R)
    second = np.einsum("im,mjl,lk->ijk", F, dR, R)
    return FR, first + second


def right_global_args(G, H, Q) -> Tuple[np.ndarray, np.ndarray]:
    """Pointwise ``(G Q, H Q Q)`` for numeric (optionally batched) jets."""
    Q = T.as_matrix(Q)
    return G @ Q, np.einsum("...ija,jk,an->...ikn", H, Q, Q)


def left_global_args(G, H, Q) -> Tuple[np.ndarray, np.ndarray]:
    """Pointwise ``(Q G, Q H)`` with ``Q`` acting on the first leg."""
    Q = T.as_matrix(Q)
    return np.einsum("ia,...aj->...ij", Q, G), np.einsum("ia,...ajk->...ijk", Q, H)


# --------------------------------------------------------------------------
# quadratic norm invariances

def norm_invariances(u, Q: RotationLike, points) -> Dict[str, float]:
    """Differences of quadratic norms between ``u#`` at ``Q x`` and ``u`` at ``x``.

    Each entry is normalized by ``1 + |norm|``.  The last entry uses the
    deformation ``x + u`` and its right Cauchy-Green tensor.
    """
    Q = _constant_rotation(Q, "norm invariance check")
    x = np.atleast_2d(np.asarray(points, dtype=float))
    xi = x @ Q.matrix.T
    us = sharp(u, Q)

    def quantities(v):
        Gv = G(v)
        eps = T.sym(Gv)
        phi = np.array([X[i] + v[i] for i in range(3)], dtype=object)
        F = G(phi)
        C = np.einsum("ki,kj->ij", F, F)
        return {
            "GRAD-Grad-u": (ops.grad(Gv), 3),
            "GRAD-sym-Grad-u": (ops.grad(eps), 3),
            "Grad-tr-id": (ops.grad(T.tr(eps)[..., None, None] * T.IDENTITY), 3),
            "GRAD-dev-sym-Grad-u": (ops.grad(T.dev(eps)), 3),
            "Curl-C": (_Curl(C), 2),
        }

    a, b = quantities(us), quantities(u)
    ev_xi, ev_x = Evaluator(xi), Evaluator(x)
    out = {}
    for name, (fs, rank) in a.items():
        ns = T.norm2(ev_xi(fs), rank)
        n0 = T.norm2(ev_x(b[name][0]), rank)
        out[name] = float(np.max(np.abs(ns - n0) / (1.0 + np.abs(n0))))
    return out
