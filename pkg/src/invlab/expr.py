"""Closed-form field expressions over R^3 with exact differentiation.

Scalar expressions form a hash-consed DAG over constants, the coordinates
``x0, x1, x2``, sums, products, integer powers, ``sin`` and ``cos``.  Vector
and tensor fields are numpy ``object`` arrays of shape ``(3,)``, ``(3, 3)``
or ``(3, 3, 3)`` holding :class:`Expr` entries, so ordinary numpy algebra
(``einsum``, transposes, slicing) builds new fields symbolically.

Coordinate axes are numbered ``0, 1, 2`` throughout.
"""
from __future__ import annotations

import math
import weakref
from dataclasses import dataclass
from itertools import product as iproduct
from typing import Dict, Iterable, Optional, Tuple, Union

import numpy as np

from .errors import UsageError
from .tensor import Rotation, anti, as_matrix

Number = Union[int, float, np.integer, np.floating]

_CONST, _VAR, _ADD, _MUL, _POW, _SIN, _COS = range(7)
_OP_NAMES = {_CONST: "const", _VAR: "var", _ADD: "add", _MUL: "mul",
             _POW: "pow", _SIN: "sin", _COS: "cos"}

_INTERN: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()


class Expr:
    """Immutable scalar expression node.  Build nodes through the module helpers."""

    __slots__ = ("op", "args", "value", "_d", "__weakref__")

    def __init__(self, op, args, value):
        self.op = op
        self.args = args
        self.value = value
        self._d = None

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        o = _coerce(other)
        return NotImplemented if o is None else add(self, o)

    def __radd__(self, other):
        o = _coerce(other)
        return NotImplemented if o is None else add(o, self)

    def __sub__(self, other):
        o = _coerce(other)
        return NotImplemented if o is None else add(self, neg(o))

    def __rsub__(self, other):
        o = _coerce(other)
        return NotImplemented if o is None else add(o, neg(self))

    def __mul__(self, other):
        o = _coerce(other)
        return NotImplemented if o is None else mul(self, o)

    def __rmul__(self, other):
        o = _coerce(other)
        return NotImplemented if o is None else mul(o, self)

    def __truediv__(self, other):
        if isinstance(other, (int, float, np.integer, np.floating)):
            return mul(self, const(1.0 / float(other)))
        return NotImplemented

    def __neg__(self):
        return neg(self)

    def __pos__(self):
        return self

    def __pow__(self, n):
        if isinstance(n, (int, np.integer)) and n >= 0:
            return power(self, int(n))
        return NotImplemented

    # -- introspection ----------------------------------------------------
    @property
    def is_const(self) -> bool:
        return self.op == _CONST

    def __float__(self):
        if self.op != _CONST:
            raise TypeError("expression is not constant")
        return self.value

    def __repr__(self):
        return to_string(self)


def _intern(op, args, value) -> Expr:
    key = (op, value, *map(id, args))
    node = _INTERN.get(key)
    if node is None:
        node = Expr(op, args, value)
        _INTERN[key] = node
    return node


def _coerce(x) -> Optional[Expr]:
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float, np.integer, np.floating)):
        return const(x)
    if isinstance(x, np.ndarray) and x.ndim == 0:
        return _coerce(x.item())
    return None


def as_expr(x) -> Expr:
    e = _coerce(x)
    if e is None:
        raise UsageError(f"cannot interpret {x!r} as a scalar expression")
    return e


# --------------------------------------------------------------------------
# constructors with constant folding and zero/one elimination

def const(c: Number) -> Expr:
    c = float(c) + 0.0  # normalizes -0.0
    if not math.isfinite(c):
        raise UsageError("constants must be finite")
    return _intern(_CONST, (), c)


def var(i: int) -> Expr:
    if i not in (0, 1, 2):
        raise UsageError(f"coordinate axis must be 0, 1 or 2, got {i}")
    return _intern(_VAR, (), int(i))


ZERO = const(0.0)
ONE = const(1.0)
X = (var(0), var(1), var(2))


def add(*terms) -> Expr:
    c = 0.0
    rest = []
    for t in terms:
        t = as_expr(t)
        if t.op == _CONST:
            c += t.value
        elif t.op == _ADD:
            for s in t.args:
                if s.op == _CONST:
                    c += s.value
                else:
                    rest.append(s)
        else:
            rest.append(t)
    if c != 0.0:
        rest.insert(0, const(c))
    if not rest:
        return ZERO
    if len(rest) == 1:
        return rest[0]
    return _intern(_ADD, tuple(rest), None)


def mul(*factors) -> Expr:
    c = 1.0
    rest = []
    for f in factors:
        f = as_expr(f)
        if f.op == _CONST:
            c *= f.value
        elif f.op == _MUL:
            for g in f.args:
                if g.op == _CONST:
                    c *= g.value
                else:
                    rest.append(g)
        else:
            rest.append(f)
        if c == 0.0:
            return ZERO
    if c != 1.0:
        rest.insert(0, const(c))
    if not rest:
        return ONE
    if len(rest) == 1:
        return rest[0]
    return _intern(_MUL, tuple(rest), None)


def neg(e) -> Expr:
    return mul(-1.0, e)


def power(e, n: int) -> Expr:
    e = as_expr(e)
    if n < 0:
        raise UsageError("only non-negative integer powers are supported")
    if n == 0:
        return ONE
    if n == 1:
        return e
    if e.op == _CONST:
        return const(e.value ** n)
    if e.op == _POW:
        return power(e.args[0], e.value * n)
    return _intern(_POW, (e,), int(n))


def sin(e) -> Expr:
    e = as_expr(e)
    if e.op == _CONST:
        return const(math.sin(e.value))
    return _intern(_SIN, (e,), None)


def cos(e) -> Expr:
    e = as_expr(e)
    if e.op == _CONST:
        return const(math.cos(e.value))
    return _intern(_COS, (e,), None)


# --------------------------------------------------------------------------
# differentiation

def diff(e, i: int) -> Expr:
    """Exact partial derivative of ``e`` with respect to coordinate ``i``."""
    e = as_expr(e)
    if i not in (0, 1, 2):
        raise UsageError(f"coordinate axis must be 0, 1 or 2, got {i}")
    d = e._d
    if d is None:
        d = e._d = [None, None, None]
    if d[i] is None:
        d[i] = _diff(e, i)
    return d[i]


def _diff(e: Expr, i: int) -> Expr:
    op = e.op
    if op == _CONST:
        return ZERO
    if op == _VAR:
        return ONE if e.value == i else ZERO
    if op == _ADD:
        return add(*[diff(t, i) for t in e.args])
    if op == _MUL:
        terms = []
        args = e.args
        for k, f in enumerate(args):
            df = diff(f, i)
            if df is ZERO:
                continue
            terms.append(mul(*args[:k], df, *args[k + 1:]))
        return add(*terms)
    if op == _POW:
        base = e.args[0]
        db = diff(base, i)
        if db is ZERO:
            return ZERO
        return mul(const(e.value), power(base, e.value - 1), db)
    if op == _SIN:
        a = e.args[0]
        return mul(cos(a), diff(a, i))
    if op == _COS:
        a = e.args[0]
        return mul(-1.0, sin(a), diff(a, i))
    raise AssertionError(op)


# --------------------------------------------------------------------------
# evaluation

def _eval_node(e: Expr, pts: np.ndarray, memo: dict):
    key = id(e)
    hit = memo.get(key)
    if hit is not None:
        return hit[1]
    op = e.op
    if op == _CONST:
        val = e.value
    elif op == _VAR:
        val = pts[:, e.value]
    elif op == _ADD:
        args = e.args
        val = _eval_node(args[0], pts, memo)
        for a in args[1:]:
            val = val + _eval_node(a, pts, memo)
    elif op == _MUL:
        args = e.args
        val = _eval_node(args[0], pts, memo)
        for a in args[1:]:
            val = val * _eval_node(a, pts, memo)
    elif op == _POW:
        val = _eval_node(e.args[0], pts, memo) ** e.value
    elif op == _SIN:
        val = np.sin(_eval_node(e.args[0], pts, memo))
    elif op == _COS:
        val = np.cos(_eval_node(e.args[0], pts, memo))
    else:
        raise AssertionError(op)
    # keep the node alive alongside its id so the key cannot be recycled
    memo[key] = (e, val)
    return val


class Evaluator:
    """Evaluates many expressions at one fixed point set, sharing subresults."""

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        self.single = pts.ndim == 1
        self.points = np.atleast_2d(pts)
        if self.points.shape[-1] != 3:
            raise UsageError("points must have three coordinates")
        self._memo: dict = {}

    def __call__(self, f):
        n = len(self.points)
        if isinstance(f, RotationField):
            f = f.matrix_field()
        if isinstance(f, np.ndarray) and f.dtype == object:
            out = np.empty((n,) + f.shape)
            for idx in np.ndindex(f.shape):
                out[(slice(None),) + idx] = self._scalar(as_expr(f[idx]))
        elif isinstance(f, np.ndarray):
            out = np.broadcast_to(f.astype(float), (n,) + f.shape).copy()
        else:
            out = self._scalar(as_expr(f))
        return out[0] if self.single else out

    def _scalar(self, e: Expr) -> np.ndarray:
        val = _eval_node(e, self.points, self._memo)
        return np.broadcast_to(np.asarray(val, dtype=float), (len(self.points),))


def evaluate(f, points):
    """Evaluate a scalar expression or a field at one point ``(3,)`` or many ``(N, 3)``.

    Returns an array of shape ``(N,) + field.shape`` (or ``field.shape`` for a
    single point).
    """
    return Evaluator(points)(f)


# --------------------------------------------------------------------------
# fields

def field(components) -> np.ndarray:
    """Wrap nested numbers/expressions as an object-array field."""
    arr = np.array(components, dtype=object)
    flat = arr.reshape(-1)
    for k in range(flat.size):
        flat[k] = as_expr(flat[k])
    return arr


def constant_field(values) -> np.ndarray:
    return field(np.asarray(values, dtype=float).tolist())


def field_rank(f) -> int:
    if isinstance(f, (Expr, int, float)):
        return 0
    return np.asarray(f).ndim


def diff_field(f, i: int):
    if isinstance(f, Expr):
        return diff(f, i)
    out = np.empty(f.shape, dtype=object)
    for idx in np.ndindex(f.shape):
        out[idx] = diff(f[idx], i)
    return out


def map_field(fn, f):
    if isinstance(f, Expr):
        return fn(f)
    out = np.empty(f.shape, dtype=object)
    for idx in np.ndindex(f.shape):
        out[idx] = fn(as_expr(f[idx]))
    return out


def substitute(f, replacement: Tuple[Expr, Expr, Expr]):
    """Replace the coordinates ``x_i`` by ``replacement[i]`` throughout ``f``."""
    memo: Dict[int, Tuple[Expr, Expr]] = {}

    def sub(e: Expr) -> Expr:
        hit = memo.get(id(e))
        if hit is not None:
            return hit[1]
        op = e.op
        if op == _CONST:
            r = e
        elif op == _VAR:
            r = replacement[e.value]
        elif op == _ADD:
            r = add(*[sub(a) for a in e.args])
        elif op == _MUL:
            r = mul(*[sub(a) for a in e.args])
        elif op == _POW:
            r = power(sub(e.args[0]), e.value)
        elif op == _SIN:
            r = sin(sub(e.args[0]))
        else:
            r = cos(sub(e.args[0]))
        memo[id(e)] = (e, r)
        return r

    return map_field(sub, f)


def compose_linear(f, A, expand: bool = True):
    """Return the field ``xi -> f(A^T xi)`` by substituting ``x_i = A_ji xi_j``.

    Polynomial components are re-expanded into monomials when ``expand`` is
    true, which keeps repeated differentiation of the result cheap.  Other
    components keep the substituted structure.
    """
    A = as_matrix(A)
    if expand:
        powers = _LinearPowers(A)

        def compose_one(e: Expr) -> Expr:
            try:
                poly = as_polynomial(e)
            except NotPolynomial:
                return substitute(e, powers.forms)
            return polynomial(powers.compose(poly))

        return map_field(compose_one, f)
    repl = tuple(add(*[mul(A[j, i], X[j]) for j in range(3)]) for i in range(3))
    return substitute(f, repl)


class _LinearPowers:
    """Cached powers of the linear forms ``x_i = A_ji xi_j`` in polynomial form."""

    def __init__(self, A: np.ndarray):
        self.forms = tuple(add(*[mul(A[j, i], X[j]) for j in range(3)]) for i in range(3))
        unit = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
        self._lin = [{unit[j]: float(A[j, i]) for j in range(3) if A[j, i] != 0.0}
                     for i in range(3)]
        self._pow = [[{(0, 0, 0): 1.0}] for _ in range(3)]
        self._mono: dict = {}

    def power(self, i: int, n: int):
        table = self._pow[i]
        while len(table) <= n:
            table.append(_poly_mul(table[-1], self._lin[i]))
        return table[n]

    def monomial(self, exps):
        hit = self._mono.get(exps)
        if hit is None:
            hit = _poly_mul(_poly_mul(self.power(0, exps[0]), self.power(1, exps[1])),
                            self.power(2, exps[2]))
            self._mono[exps] = hit
        return hit

    def compose(self, poly):
        out: Dict[Tuple[int, int, int], float] = {}
        for exps, c in poly.items():
            for k, v in self.monomial(exps).items():
                out[k] = out.get(k, 0.0) + c * v
        return out


def expand_polynomials(f):
    """Rewrite polynomial components as plain monomial sums; others are kept."""

    def expand_one(e: Expr) -> Expr:
        try:
            return polynomial(as_polynomial(e))
        except NotPolynomial:
            return e

    return map_field(expand_one, f)


# --------------------------------------------------------------------------
# rotation fields

@dataclass(frozen=True)
class RotationField:
    """Either a constant rotation or a fixed-axis rotation with a variable angle.

    The axis-angle form uses Rodrigues' formula
    ``Q = id + sin(angle) K + (1 - cos(angle)) K^2`` with ``K = anti(axis)``,
    which is a proper rotation at every point.
    """

    constant: Optional[Rotation] = None
    axis: Optional[Tuple[float, float, float]] = None
    angle: Optional[Expr] = None

    def __post_init__(self):
        if (self.constant is None) == (self.axis is None):
            raise UsageError("give either a constant rotation or an axis with an angle")
        if self.axis is not None:
            n = np.asarray(self.axis, dtype=float)
            norm = np.linalg.norm(n)
            if norm == 0.0:
                raise UsageError("rotation axis must be non-zero")
            object.__setattr__(self, "axis", tuple(float(c) for c in n / norm))
            object.__setattr__(self, "angle", as_expr(self.angle))

    @classmethod
    def from_rotation(cls, Q: Rotation) -> "RotationField":
        return cls(constant=Q)

    @classmethod
    def axis_angle(cls, axis, angle) -> "RotationField":
        return cls(axis=tuple(axis), angle=as_expr(angle))

    @property
    def is_constant(self) -> bool:
        return self.constant is not None or self.angle.is_const

    def matrix_field(self) -> np.ndarray:
        if self.constant is not None:
            return constant_field(self.constant.matrix)
        K = anti(np.asarray(self.axis))
        K2 = K @ K
        s, c1 = sin(self.angle), add(1.0, neg(cos(self.angle)))
        out = np.empty((3, 3), dtype=object)
        for i in range(3):
            for j in range(3):
                out[i, j] = add(1.0 if i == j else 0.0, mul(K[i, j], s), mul(K2[i, j], c1))
        return out

    def at(self, points) -> np.ndarray:
        return evaluate(self.matrix_field(), points)

    def to_json(self) -> dict:
        if self.constant is not None:
            if self.constant.quaternion is not None:
                return {"quaternion": list(self.constant.quaternion)}
            return {"matrix": self.constant.matrix.tolist()}
        return {"axis": list(self.axis), "angle_poly": expr_to_json(self.angle)}

    @classmethod
    def from_json(cls, data: dict) -> "RotationField":
        from .tensor import rotation_from_integer_quaternion
        if "quaternion" in data:
            return cls(constant=rotation_from_integer_quaternion(data["quaternion"]))
        if "matrix" in data:
            return cls(constant=Rotation(np.asarray(data["matrix"], dtype=float)))
        return cls(axis=tuple(data["axis"]), angle=expr_from_json(data["angle_poly"]))


# --------------------------------------------------------------------------
# random polynomial corpus

def monomial_exponents(degree: int):
    """All exponent triples of total degree <= ``degree`` in graded order."""
    out = []
    for d in range(degree + 1):
        for a in range(d, -1, -1):
            for b in range(d - a, -1, -1):
                out.append((a, b, d - a - b))
    return out


def monomial(exps) -> Expr:
    return mul(*[power(X[i], int(n)) for i, n in enumerate(exps)])


def polynomial(terms: Dict[Tuple[int, int, int], float]) -> Expr:
    return add(*[mul(c, monomial(e)) for e, c in terms.items() if c != 0.0])


def random_polynomial(degree: int, rng: np.random.Generator,
                      coeff_range=(-1.0, 1.0)) -> Expr:
    exps = monomial_exponents(degree)
    coeffs = rng.uniform(coeff_range[0], coeff_range[1], size=len(exps))
    return polynomial(dict(zip(exps, coeffs)))


def random_polynomial_field(degree: int, coeff_range=(-1.0, 1.0), seed=0,
                            shape: Tuple[int, ...] = (3,)) -> np.ndarray:
    """Field whose components are dense random polynomials of total degree <= ``degree``.

    ``seed`` may be an integer or a ``numpy.random.Generator``.
    """
    if degree < 0:
        raise UsageError("degree must be non-negative")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    out = np.empty(shape, dtype=object)
    for idx in np.ndindex(shape):
        out[idx] = random_polynomial(degree, rng, coeff_range)
    return out[()] if shape == () else out


def sample_points(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(-1.0, 1.0, size=(n, 3))


# --------------------------------------------------------------------------
# polynomial extraction and serialization

class NotPolynomial(ValueError):
    pass


def _poly_mul(p, q):
    out: Dict[Tuple[int, int, int], float] = {}
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            e = (e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2])
            out[e] = out.get(e, 0.0) + c1 * c2
    return out


def as_polynomial(e) -> Dict[Tuple[int, int, int], float]:
    """Expand ``e`` into ``{exponents: coefficient}``; raises for trig nodes."""
    memo: dict = {}

    def go(n: Expr):
        hit = memo.get(id(n))
        if hit is not None:
            return hit[1]
        op = n.op
        if op == _CONST:
            r = {(0, 0, 0): n.value} if n.value != 0.0 else {}
        elif op == _VAR:
            ex = [0, 0, 0]
            ex[n.value] = 1
            r = {tuple(ex): 1.0}
        elif op == _ADD:
            r = {}
            for a in n.args:
                for k, v in go(a).items():
                    r[k] = r.get(k, 0.0) + v
        elif op == _MUL:
            coeff, ex, rest = 1.0, [0, 0, 0], []
            for a in n.args:
                if a.op == _CONST:
                    coeff *= a.value
                elif a.op == _VAR:
                    ex[a.value] += 1
                elif a.op == _POW and a.args[0].op == _VAR:
                    ex[a.args[0].value] += a.value
                else:
                    rest.append(a)
            r = {tuple(ex): coeff}
            for a in rest:
                r = _poly_mul(r, go(a))
        elif op == _POW and n.args[0].op == _VAR:
            ex = [0, 0, 0]
            ex[n.args[0].value] = n.value
            r = {tuple(ex): 1.0}
        elif op == _POW:
            base = go(n.args[0])
            r = {(0, 0, 0): 1.0}
            for _ in range(n.value):
                r = _poly_mul(r, base)
        else:
            raise NotPolynomial("expression contains trigonometric nodes")
        memo[id(n)] = (n, r)
        return r

    return {k: v for k, v in go(as_expr(e)).items() if v != 0.0}


def expr_to_json(e):
    """Term list for polynomials, otherwise a structural node tree."""
    e = as_expr(e)
    try:
        poly = as_polynomial(e)
    except NotPolynomial:
        return _node_to_json(e)
    return [{"coeff": c, "exponents": list(k)} for k, c in sorted(poly.items())]


def _node_to_json(e: Expr):
    name = _OP_NAMES[e.op]
    if e.op == _CONST:
        return {"op": name, "value": e.value}
    if e.op == _VAR:
        return {"op": name, "axis": e.value}
    out = {"op": name, "args": [_node_to_json(a) for a in e.args]}
    if e.op == _POW:
        out["exponent"] = e.value
    return out


def expr_from_json(data) -> Expr:
    if isinstance(data, list):
        return polynomial({tuple(int(v) for v in t["exponents"]): float(t["coeff"])
                           for t in data})
    op = data["op"]
    if op == "const":
        return const(data["value"])
    if op == "var":
        return var(int(data["axis"]))
    args = [expr_from_json(a) for a in data.get("args", [])]
    if op == "add":
        return add(*args)
    if op == "mul":
        return mul(*args)
    if op == "pow":
        return power(args[0], int(data["exponent"]))
    if op == "sin":
        return sin(args[0])
    if op == "cos":
        return cos(args[0])
    raise UsageError(f"unknown expression node {op!r}")


def field_to_json(f) -> dict:
    if isinstance(f, Expr):
        return {"shape": [], "components": [expr_to_json(f)]}
    return {"shape": list(f.shape),
            "components": [expr_to_json(f[idx]) for idx in np.ndindex(f.shape)]}


def field_from_json(data: dict):
    shape = tuple(data.get("shape", [3]))
    comps = [expr_from_json(c) for c in data["components"]]
    if shape == ():
        return comps[0]
    if len(comps) != int(np.prod(shape)):
        raise UsageError("component count does not match field shape")
    out = np.empty(shape, dtype=object)
    for k, idx in enumerate(np.ndindex(shape)):
        out[idx] = comps[k]
    return out


def to_string(e: Expr) -> str:
    op = e.op
    if op == _CONST:
        return repr(e.value)
    if op == _VAR:
        return f"x{e.value}"
    if op == _ADD:
        return "(" + " + ".join(to_string(a) for a in e.args) + ")"
    if op == _MUL:
        return "*".join(to_string(a) for a in e.args)
    if op == _POW:
        return f"{to_string(e.args[0])}**{e.value}"
    return f"{_OP_NAMES[op]}({to_string(e.args[0])})"


def node_count(f) -> int:
    """Number of distinct DAG nodes reachable from a field (diagnostics)."""
    seen = set()
    stack = [as_expr(f)] if isinstance(f, Expr) else [as_expr(v) for v in np.asarray(f).reshape(-1)]
    while stack:
        n = stack.pop()
        if id(n) in seen:
            continue
        seen.add(id(n))
        stack.extend(n.args)
    return len(seen)
