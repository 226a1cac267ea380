"""Energy densities, constitutive maps and balance residuals.

Densities act on :class:`DisplacementJet` values (numeric, optionally with a
leading batch axis).  Stresses and balance residuals act on symbolic
displacement fields so that divergences stay exact.

Curvature moduli use the names ``a_devsym``, ``a_skew`` and ``a_tr`` for the
weights of the trace-free symmetric, skew and trace parts of the curvature.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field, replace
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from . import ops
from . import tensor as T
from .errors import UsageError
from .expr import X

LINEAR, NONLINEAR = "linear", "nonlinear"


# --------------------------------------------------------------------------
# parameters

@dataclass(frozen=True)
class LameParams:
    mu: float = 1.0
    lam: float = 1.0

    def __post_init__(self):
        if not self.mu > 0.0:
            raise UsageError("shear modulus mu must be positive")

    @property
    def kappa(self) -> float:
        """Bulk modulus ``lambda + 2 mu / 3``."""
        return self.lam + 2.0 * self.mu / 3.0

    @classmethod
    def from_kappa(cls, mu: float, kappa: float) -> "LameParams":
        return cls(mu=mu, lam=kappa - 2.0 * mu / 3.0)


@dataclass(frozen=True)
class CurvatureParams:
    Lc: float = 1.0
    a_devsym: float = 1.0
    a_skew: float = 1.0
    a_tr: float = 1.0

    def __post_init__(self):
        if not self.Lc > 0.0:
            raise UsageError("characteristic length Lc must be positive")


@dataclass(frozen=True)
class ModelParams:
    lame: LameParams = dc_field(default_factory=LameParams)
    curvature: CurvatureParams = dc_field(default_factory=CurvatureParams)
    psi_coeffs: Tuple[float, float, float] = (1.0, 1.0, 1.0)

    @classmethod
    def from_json(cls, data: dict) -> "ModelParams":
        known = {"mu", "lambda", "Lc", "a_devsym", "a_skew", "a_tr", "psi_coeffs"}
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown parameter(s): {', '.join(sorted(unknown))}")
        lame = LameParams(mu=float(data.get("mu", 1.0)), lam=float(data.get("lambda", 1.0)))
        curv = CurvatureParams(Lc=float(data.get("Lc", 1.0)),
                               a_devsym=float(data.get("a_devsym", 1.0)),
                               a_skew=float(data.get("a_skew", 1.0)),
                               a_tr=float(data.get("a_tr", 1.0)))
        psi = tuple(float(c) for c in data.get("psi_coeffs", (1.0, 1.0, 1.0)))
        if len(psi) != 3:
            raise UsageError("psi_coeffs needs three entries")
        return cls(lame, curv, psi)

    def to_json(self) -> dict:
        c = self.curvature
        return {"mu": self.lame.mu, "lambda": self.lame.lam, "Lc": c.Lc,
                "a_devsym": c.a_devsym, "a_skew": c.a_skew, "a_tr": c.a_tr,
                "psi_coeffs": list(self.psi_coeffs)}


@dataclass(frozen=True)
class DisplacementJet:
    """First gradient ``G`` (``Grad u`` or ``F``) and second gradient ``H[i, j, k] = d_k G_ij``."""

    G: np.ndarray
    H: np.ndarray

    def d(self, i: int) -> np.ndarray:
        """Partial derivative of the first gradient along axis ``i``."""
        return self.H[..., i]


@dataclass(frozen=True)
class EnergyModel:
    id: str
    kinematics: str
    params: ModelParams
    density: Callable[[DisplacementJet], np.ndarray]

    def __call__(self, jet: DisplacementJet):
        return self.density(jet)


# --------------------------------------------------------------------------
# linear constitutive maps (work on numeric arrays and symbolic fields)

def strain(G):
    return T.sym(G)


def cauchy_stress(eps, p: LameParams):
    return 2.0 * p.mu * np.asarray(eps) + p.lam * np.asarray(T.tr(eps))[..., None, None] * T.IDENTITY


def w_lin(eps, p: LameParams, form: str = "lambda"):
    """Isotropic linear elastic energy in Lame form or in shear/bulk form."""
    if form == "lambda":
        return p.mu * T.norm2(eps, 2) + 0.5 * p.lam * T.tr(eps) ** 2
    if form == "kappa":
        return p.mu * T.norm2(T.dev(eps), 2) + 0.5 * p.kappa * T.tr(eps) ** 2
    raise UsageError(f"unknown form {form!r}")


def curvature_from_jet(H):
    """Curvature ``k_ij = -1/2 eps_abi u_a,bj`` from a second displacement gradient."""
    return -0.5 * np.einsum("...abj,abi->...ij", H, T.EPS)


def curl_strain_from_jet(H):
    """``Curl sym Grad u`` from a second displacement gradient."""
    deps = 0.5 * (H + np.swapaxes(H, -3, -2))
    return -np.einsum("...iab,abj->...ij", deps, T.EPS)


def w_curv_couple_stress(k, cp: CurvatureParams, mu: float):
    return mu * cp.Lc ** 2 * (cp.a_devsym * T.norm2(T.dev(T.sym(k)), 2)
                              + cp.a_tr * T.tr(k) ** 2
                              + cp.a_skew * T.norm2(T.skew(k), 2))


def couple_stress_m(k, cp: CurvatureParams, mu: float):
    """Couple stress ``2 mu Lc^2 (a_devsym dev sym k + a_skew skew k)``."""
    return 2.0 * mu * cp.Lc ** 2 * (cp.a_devsym * T.dev(T.sym(k)) + cp.a_skew * T.skew(k))


def nonlocal_stress(m_field):
    """Skew force stress ``-1/2 anti(Div m)`` induced by a couple stress field."""
    return -0.5 * T.anti(ops.div(m_field))


def strain_gradient_hyperstress(H):
    """Hyperstress for the identity sixth-order map: a copy of ``H``."""
    return np.array(H, copy=True)


# --------------------------------------------------------------------------
# nonlinear helpers

def cofactor(A):
    """Cofactor matrix ``det(A) A^{-T}`` via the polynomial adjugate formula."""
    A = np.asarray(A)
    r0, r1, r2 = A[..., 0, :], A[..., 1, :], A[..., 2, :]
    return np.stack([np.cross(r1, r2), np.cross(r2, r0), np.cross(r0, r1)], axis=-2)


def det(A):
    A = np.asarray(A)
    return np.einsum("...i,...i->...", A[..., 0, :], np.cross(A[..., 1, :], A[..., 2, :]))


def principal_invariants(C):
    return T.tr(C), T.tr(cofactor(C)), det(C)


def right_cauchy_green(F):
    return np.einsum("...ki,...kj->...ij", F, F)


def _invariant_gradients(jet: DisplacementJet):
    """``grad_I[..., k, i] = d_i I_k(C)`` for the three principal invariants."""
    F = jet.G
    C = right_cauchy_green(F)
    I1 = T.tr(C)
    dI1 = np.broadcast_to(T.IDENTITY, C.shape)
    dI2 = I1[..., None, None] * T.IDENTITY - C
    dI3 = cofactor(C)
    rows = []
    for dI in (dI1, dI2, dI3):
        comps = []
        for i in range(3):
            dF = jet.d(i)
            dC = np.einsum("...ki,...kj->...ij", dF, F) + np.einsum("...ki,...kj->...ij", F, dF)
            comps.append(np.sum(dI * dC, axis=(-2, -1)))
        rows.append(np.stack(comps, axis=-1))
    return np.stack(rows, axis=-2)


def _connection(jet: DisplacementJet, i: int):
    return np.einsum("...ki,...kj->...ij", jet.G, jet.d(i))


# --------------------------------------------------------------------------
# densities

def _nonlinear_densities(p: ModelParams) -> Dict[str, Callable]:
    c1, c2, c3 = p.psi_coeffs

    def f_minus_id(j):
        return T.norm2(j.G - T.IDENTITY, 2)

    def sym_f_minus_id(j):
        return T.norm2(T.sym(j.G - T.IDENTITY), 2)

    def invariants(j):
        I1, I2, I3 = principal_invariants(right_cauchy_green(j.G))
        return c1 * I1 + c2 * I2 + c3 * I3

    def connection_curv(j):
        return sum(T.norm2(_connection(j, i), 2) for i in range(3))

    def sym_connection_curv(j):
        return sum(T.norm2(T.sym(_connection(j, i)), 2) for i in range(3))

    def full_second_gradient(j):
        return T.norm2(j.H, 3)

    def grad_invariants(j):
        return T.norm2(_invariant_gradients(j), 2)

    def finger_curv(j):
        gI = _invariant_gradients(j)
        B = np.einsum("...ki,...li->...kl", gI, gI)
        return T.tr(B) + T.tr(B @ B)

    return {
        "F-minus-id": f_minus_id,
        "sym-F-minus-id": sym_f_minus_id,
        "invariants": invariants,
        "connection-curv": connection_curv,
        "sym-connection-curv": sym_connection_curv,
        "full-second-gradient": full_second_gradient,
        "grad-invariants": grad_invariants,
        "finger-curv": finger_curv,
    }


NONLINEAR_IDS = ("F-minus-id", "sym-F-minus-id", "invariants", "connection-curv",
                 "sym-connection-curv", "full-second-gradient", "grad-invariants",
                 "finger-curv")
LINEAR_IDS = ("classical", "couple-stress", "couple-stress-conformal", "couple-stress-skew",
              "couple-stress-symmetric-total", "strain-gradient")
MODEL_IDS = NONLINEAR_IDS + LINEAR_IDS
COUPLE_STRESS_IDS = ("couple-stress", "couple-stress-conformal", "couple-stress-skew")
BALANCE_IDS = ("classical", "couple-stress", "couple-stress-symmetric-total", "strain-gradient")


def model_curvature_params(model_id: str, cp: CurvatureParams) -> CurvatureParams:
    """Curvature moduli actually used by a model variant."""
    if model_id == "couple-stress-conformal":
        return replace(cp, a_skew=0.0)
    if model_id == "couple-stress-skew":
        return replace(cp, a_devsym=0.0)
    if model_id == "couple-stress-symmetric-total":
        return replace(cp, a_tr=0.0)
    return cp


def _linear_density(model_id: str, p: ModelParams) -> Callable:
    lame = p.lame
    cp = model_curvature_params(model_id, p.curvature)

    def elastic(j):
        return w_lin(strain(j.G), lame)

    if model_id == "classical":
        return elastic
    if model_id in COUPLE_STRESS_IDS:
        return lambda j: elastic(j) + w_curv_couple_stress(curvature_from_jet(j.H), cp, lame.mu)
    if model_id == "couple-stress-symmetric-total":
        return lambda j: elastic(j) + w_curv_couple_stress(curl_strain_from_jet(j.H), cp, lame.mu)
    if model_id == "strain-gradient":
        return lambda j: elastic(j) + 0.5 * T.norm2(j.H, 3)
    raise UsageError(f"unknown linear model {model_id!r}")


def nonlinear_catalog(name: str, params: Optional[ModelParams] = None) -> EnergyModel:
    params = params or ModelParams()
    densities = _nonlinear_densities(params)
    if name not in densities:
        raise UsageError(f"unknown nonlinear model {name!r}; known: {', '.join(NONLINEAR_IDS)}")
    return EnergyModel(name, NONLINEAR, params, densities[name])


def linear_catalog(name: str, params: Optional[ModelParams] = None) -> EnergyModel:
    params = params or ModelParams()
    if name not in LINEAR_IDS:
        raise UsageError(f"unknown linear model {name!r}; known: {', '.join(LINEAR_IDS)}")
    return EnergyModel(name, LINEAR, params, _linear_density(name, params))


def get_model(model_id: str, params: Optional[ModelParams] = None) -> EnergyModel:
    if model_id in NONLINEAR_IDS:
        return nonlinear_catalog(model_id, params)
    if model_id in LINEAR_IDS:
        return linear_catalog(model_id, params)
    raise UsageError(f"unknown model {model_id!r}; known: {', '.join(MODEL_IDS)}")


# --------------------------------------------------------------------------
# stresses and balance residuals on symbolic fields

@dataclass
class StressState:
    sigma: np.ndarray
    tau: np.ndarray
    m: Optional[np.ndarray]
    total: np.ndarray


@dataclass
class BalanceResidual:
    linear: np.ndarray
    angular: Optional[np.ndarray] = None


def stress_state(model_id: str, u, params: Optional[ModelParams] = None) -> StressState:
    """Local, nonlocal, couple/hyper and total stress fields of a linear model."""
    params = params or ModelParams()
    lame = params.lame
    cp = model_curvature_params(model_id, params.curvature)
    Gu = ops.grad_vec(u)
    eps = strain(Gu)
    sigma = cauchy_stress(eps, lame)
    zero = np.zeros((3, 3))
    if model_id == "classical":
        return StressState(sigma, zero, None, sigma)
    if model_id in COUPLE_STRESS_IDS:
        m = couple_stress_m(ops.curvature(u), cp, lame.mu)
        tau = nonlocal_stress(m)
        return StressState(sigma, tau, m, sigma + tau)
    if model_id == "couple-stress-symmetric-total":
        m_hat = couple_stress_m(ops.curl_ten2(eps), cp, lame.mu)
        tau_hat = T.sym(ops.curl_ten2(m_hat))
        return StressState(sigma, tau_hat, m_hat, sigma + tau_hat)
    if model_id == "strain-gradient":
        hyper = strain_gradient_hyperstress(ops.grad(Gu))
        tau = ops.div(hyper)
        return StressState(sigma, tau, hyper, sigma + tau)
    if model_id in MODEL_IDS:
        raise UsageError(f"model {model_id!r} has no linear stress state")
    raise UsageError(f"unknown model {model_id!r}")


def balance_residual(model_id: str, u, f, params: Optional[ModelParams] = None) -> BalanceResidual:
    """``Div(total stress) + f``; couple stress models also report ``Div m + 2 axl(skew total)``."""
    s = stress_state(model_id, u, params)
    linear = ops.div(s.total) + np.asarray(f)
    angular = None
    if model_id in COUPLE_STRESS_IDS:
        angular = ops.div(s.m) + 2.0 * T.axl_skew(s.total)
    return BalanceResidual(linear, angular)


def manufactured_force(model_id: str, u, params: Optional[ModelParams] = None):
    """Body force ``-Div(total stress)`` that makes ``u`` an equilibrium state."""
    return -ops.div(stress_state(model_id, u, params).total)


def deformation_from_displacement(u) -> np.ndarray:
    """The deformation field ``x + u``."""
    return np.array([X[i] + u[i] for i in range(3)], dtype=object)
