"""Independent reference implementations used only by the tests."""
import itertools

import numpy as np

from invlab.expr import evaluate


def levi_civita_bruteforce():
    eps = np.zeros((3, 3, 3))
    for i, j, k in itertools.product(range(3), repeat=3):
        eps[i, j, k] = (i - j) * (j - k) * (k - i) / 2.0
    return eps


def central_difference(f, point, axis, h=1e-5):
    """Central difference of a field at one point along one axis."""
    p = np.asarray(point, dtype=float)
    e = np.zeros(3)
    e[axis] = h
    return (evaluate(f, p + e) - evaluate(f, p - e)) / (2.0 * h)


def fd_gradient(f, point, h=1e-5):
    """Numerical gradient with the derivative index appended last."""
    return np.stack([central_difference(f, point, k, h) for k in range(3)], axis=-1)


def poly_diff(poly, axis):
    """Differentiate a {exponents: coeff} polynomial dict."""
    out = {}
    for exps, c in poly.items():
        n = exps[axis]
        if n == 0:
            continue
        e = list(exps)
        e[axis] -= 1
        out[tuple(e)] = out.get(tuple(e), 0.0) + c * n
    return out


def poly_close(p, q, tol=1e-12):
    keys = set(p) | set(q)
    return all(abs(p.get(k, 0.0) - q.get(k, 0.0)) <= tol * (1 + abs(p.get(k, 0.0))) for k in keys)


def rodrigues(axis, angle):
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    K = np.array([[0, -n[2], n[1]], [n[2], 0, -n[0]], [-n[1], n[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * K @ K


def quaternion_via_axis_angle(q):
    """Rotation of a quaternion through its axis-angle form."""
    q = np.asarray(q, dtype=float)
    q = q / np.linalg.norm(q)
    w, v = q[0], q[1:]
    s = np.linalg.norm(v)
    if s == 0:
        return np.eye(3)
    return rodrigues(v / s, 2.0 * np.arctan2(s, w))


def fd_hessian(f, point, h=1e-3):
    """Nested central differences; exact up to rounding for cubic polynomials."""
    p = np.asarray(point, dtype=float)
    out = []
    for b in range(3):
        e = np.zeros(3)
        e[b] = h
        out.append((fd_gradient(f, p + e, h) - fd_gradient(f, p - e, h)) / (2.0 * h))
    return np.stack(out, axis=-1)


def curl_of_gradient(dX):
    """Row-wise curl ``-X_{ia,b} eps_abj`` from a gradient array ``dX[i, a, b]``."""
    return -np.einsum("iab,abj->ij", dX, levi_civita_bruteforce())


def inc_from_hessian(d2S):
    """``Curl((Curl S)^T)`` from second derivatives ``d2S[i, a, b, c] = S_ia,bc``."""
    eps = levi_civita_bruteforce()
    # (Curl S)_{kl} = -S_{ka,b} eps_abl ; transpose then curl along c
    dcurl = -np.einsum("kabc,abl->klc", d2S, eps)
    return -np.einsum("klc,kcj->lj", dcurl, eps)
