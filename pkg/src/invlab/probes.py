"""Invariance probes: sample fields and rotations, compare energies, report verdicts.

A probe cannot prove an invariance.  It only searches for counterexamples,
so a HOLDS verdict means no violation above tolerance was found on the
sampled corpus.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field as dc_field, replace
from enum import Enum
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import ops
from . import tensor as T
from .errors import UsageError
from .expr import (Evaluator, RotationField, field_from_json, field_to_json,
                   random_polynomial, random_polynomial_field, sample_points)
from .models import (BALANCE_IDS, LINEAR, LINEAR_IDS, MODEL_IDS, NONLINEAR, NONLINEAR_IDS,
                     DisplacementJet, EnergyModel, ModelParams, deformation_from_displacement,
                     get_model, manufactured_force, stress_state)
from .tensor import random_rotation
from .transforms import (left_global_args, left_local_compose, right_global_args,
                         right_local_args, sharp)

SCHEMA_VERSION = 1
HOLDS, VIOLATED, NOT_APPLICABLE = "HOLDS", "VIOLATED", "n/a"


class InvarianceKind(str, Enum):
    LEFT_GLOBAL = "left-global"
    RIGHT_GLOBAL = "right-global"
    LEFT_LOCAL = "left-local"
    RIGHT_LOCAL = "right-local"
    SHARP = "sharp"
    BALANCE = "balance"

    @classmethod
    def parse(cls, value) -> "InvarianceKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            raise UsageError(f"unknown invariance kind {value!r}; known: "
                             f"{', '.join(k.value for k in cls)}") from None

    @property
    def is_local(self) -> bool:
        return self in (InvarianceKind.LEFT_LOCAL, InvarianceKind.RIGHT_LOCAL)

    @property
    def is_left(self) -> bool:
        return self in (InvarianceKind.LEFT_GLOBAL, InvarianceKind.LEFT_LOCAL)


KINDS = tuple(InvarianceKind)
ROTATION_SOURCES = ("auto", "rational-quaternion", "axis-angle-field")


@dataclass(frozen=True)
class ProbeConfig:
    """Sampling plan of a probe.

    ``rotation_source="auto"`` draws integer-quaternion rotations for global
    kinds and axis-angle rotation fields for local kinds.  Forcing
    ``"rational-quaternion"`` on a local kind probes it with constant
    rotation fields.
    """

    trials: int = 20
    seed: int = 0
    field_degree: int = 3
    corpus_size: int = 20
    points_per_field: int = 10
    tolerance: float = 1e-9
    rotation_source: str = "auto"
    coeff_range: Tuple[float, float] = (-1.0, 1.0)

    def __post_init__(self):
        if self.trials < 1:
            raise UsageError("trials must be at least 1")
        if not self.tolerance > 0.0:
            raise UsageError("tolerance must be positive")
        if self.seed < 0:
            raise UsageError("seed must be non-negative")
        if self.field_degree < 0 or self.corpus_size < 1 or self.points_per_field < 1:
            raise UsageError("field_degree, corpus_size and points_per_field must be positive")
        if self.rotation_source not in ROTATION_SOURCES:
            raise UsageError(f"rotation_source must be one of {', '.join(ROTATION_SOURCES)}")
        object.__setattr__(self, "coeff_range", tuple(float(c) for c in self.coeff_range))


@dataclass
class ProbeReport:
    model_id: str
    kind: InvarianceKind
    verdict: str
    max_violation: float
    tolerance: float
    trials_run: int
    seed: int
    witness: Optional[dict] = None

    def to_json(self) -> dict:
        out = {"schema_version": SCHEMA_VERSION, "model": self.model_id,
               "kind": self.kind.value, "verdict": self.verdict,
               "max_violation": self.max_violation, "tolerance": self.tolerance,
               "trials": self.trials_run, "seed": self.seed}
        if self.witness is not None:
            out["witness"] = self.witness
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


# --------------------------------------------------------------------------
# expected classification

def _expected_table() -> Dict[Tuple[str, InvarianceKind], str]:
    K = InvarianceKind
    H, V = HOLDS, VIOLATED
    rows = {
        "F-minus-id":           {K.LEFT_GLOBAL: V, K.RIGHT_GLOBAL: V, K.LEFT_LOCAL: V, K.RIGHT_LOCAL: V, K.SHARP: H},
        "sym-F-minus-id":       {K.LEFT_GLOBAL: V, K.RIGHT_GLOBAL: V, K.LEFT_LOCAL: V, K.RIGHT_LOCAL: V, K.SHARP: H},
        "invariants":           {K.LEFT_GLOBAL: H, K.RIGHT_GLOBAL: H, K.LEFT_LOCAL: H, K.RIGHT_LOCAL: H, K.SHARP: H},
        "connection-curv":      {K.LEFT_GLOBAL: H, K.RIGHT_GLOBAL: H, K.LEFT_LOCAL: V, K.RIGHT_LOCAL: V, K.SHARP: H},
        "sym-connection-curv":  {K.LEFT_GLOBAL: H, K.RIGHT_GLOBAL: H, K.LEFT_LOCAL: H, K.RIGHT_LOCAL: V, K.SHARP: H},
        "full-second-gradient": {K.LEFT_GLOBAL: H, K.RIGHT_GLOBAL: H, K.LEFT_LOCAL: V, K.RIGHT_LOCAL: V, K.SHARP: H},
        "grad-invariants":      {K.LEFT_GLOBAL: H, K.RIGHT_GLOBAL: H, K.LEFT_LOCAL: H, K.RIGHT_LOCAL: H, K.SHARP: H},
        "finger-curv":          {K.LEFT_GLOBAL: H, K.RIGHT_GLOBAL: H, K.LEFT_LOCAL: H, K.RIGHT_LOCAL: H, K.SHARP: H},
    }
    for mid in LINEAR_IDS:
        # the elastic part sees only sym(G Q), which is not a rotated strain
        rows[mid] = {K.RIGHT_GLOBAL: V, K.RIGHT_LOCAL: V, K.SHARP: H}
        if mid in BALANCE_IDS:
            rows[mid][K.BALANCE] = H
    return {(m, k): v for m, r in rows.items() for k, v in r.items()}


EXPECTED: Dict[Tuple[str, InvarianceKind], str] = _expected_table()


def expected_verdict(model_id: str, kind) -> Optional[str]:
    return EXPECTED.get((model_id, InvarianceKind.parse(kind)))


def applicable(model: EnergyModel, kind: InvarianceKind) -> Optional[str]:
    """``None`` if the probe applies, otherwise the reason it does not."""
    if kind == InvarianceKind.BALANCE:
        if model.id not in BALANCE_IDS:
            return f"balance probes need one of: {', '.join(BALANCE_IDS)}"
        return None
    if kind.is_left and model.kinematics != NONLINEAR:
        return "left invariance kinds need nonlinear (deformation gradient) kinematics"
    return None


# --------------------------------------------------------------------------
# deterministic sampling

@lru_cache(maxsize=256)
def corpus_field(seed: int, degree: int, coeff_range: Tuple[float, float], index: int):
    """Field ``index`` of the probe corpus; cached so derivative caches persist."""
    rng = np.random.default_rng([seed, 0, index])
    return random_polynomial_field(degree, coeff_range, rng)


def trial_rotation(cfg: ProbeConfig, trial: int, local: bool) -> RotationField:
    rng = np.random.default_rng([cfg.seed, 1, trial])
    source = cfg.rotation_source
    if source == "auto":
        source = "axis-angle-field" if local else "rational-quaternion"
    if source == "rational-quaternion":
        return RotationField.from_rotation(random_rotation(rng))
    if not local:
        raise UsageError("global kinds need constant rotations; "
                         "use rotation_source 'rational-quaternion' or 'auto'")
    while True:
        axis = rng.integers(-3, 4, size=3)
        if np.any(axis):
            break
    angle = random_polynomial(2, rng, (-1.0, 1.0))
    return RotationField.axis_angle(axis.astype(float), angle)


def trial_points(cfg: ProbeConfig, trial: int) -> np.ndarray:
    return sample_points(cfg.points_per_field, np.random.default_rng([cfg.seed, 2, trial]))


# --------------------------------------------------------------------------
# jets

def first_gradient_field(u, kinematics: str):
    """``Grad u`` for linear kinematics, ``F = Grad(x + u)`` for nonlinear ones."""
    if kinematics == NONLINEAR:
        return ops.grad_vec(deformation_from_displacement(u))
    return ops.grad_vec(u)


def _jet(G, H, points) -> DisplacementJet:
    ev = Evaluator(points)
    return DisplacementJet(ev(G), ev(H))


def transformed_jets(kind: InvarianceKind, kinematics: str, u, Qf: RotationField,
                     points) -> Tuple[DisplacementJet, DisplacementJet]:
    """Original and transformed energy arguments at ``points``.

    For the sharp kind the transformed jet belongs to the rotated field and
    is evaluated at the mapped points ``Q x``.
    """
    Gf = first_gradient_field(u, kinematics)
    Hf = ops.grad(Gf)
    orig = _jet(Gf, Hf, points)
    if kind == InvarianceKind.LEFT_GLOBAL:
        return orig, DisplacementJet(*left_global_args(orig.G, orig.H, Qf.constant))
    if kind == InvarianceKind.RIGHT_GLOBAL:
        return orig, DisplacementJet(*right_global_args(orig.G, orig.H, Qf.constant))
    if kind == InvarianceKind.LEFT_LOCAL:
        Gp = left_local_compose(Qf, Gf)
        return orig, _jet(Gp, ops.grad(Gp), points)
    if kind == InvarianceKind.RIGHT_LOCAL:
        Gp, Hp = right_local_args(Gf, Qf)
        return orig, _jet(Gp, Hp, points)
    if kind == InvarianceKind.SHARP:
        us = sharp(u, Qf.constant)
        Gs = first_gradient_field(us, kinematics)
        xi = np.atleast_2d(points) @ Qf.constant.matrix.T
        return orig, _jet(Gs, ops.grad(Gs), xi)
    raise UsageError(f"no argument transform for kind {kind.value!r}")


def energy_violation(model: EnergyModel, orig: DisplacementJet,
                     new: DisplacementJet) -> np.ndarray:
    """Per-point ``|W(new) - W(orig)| / (1 + |W(orig)|)``."""
    w0 = np.asarray(model(orig), dtype=float)
    w1 = np.asarray(model(new), dtype=float)
    return np.abs(w1 - w0) / (1.0 + np.abs(w0))


@lru_cache(maxsize=1024)
def _cached_trial(cfg: ProbeConfig, kind: InvarianceKind, kinematics: str, trial: int):
    u = corpus_field(cfg.seed, cfg.field_degree, cfg.coeff_range, trial % cfg.corpus_size)
    local = kind.is_local
    if kind == InvarianceKind.SHARP and cfg.rotation_source == "axis-angle-field":
        raise UsageError("the sharp kind needs constant rotations")
    Qf = trial_rotation(cfg, trial, local)
    pts = trial_points(cfg, trial)
    orig, new = transformed_jets(kind, kinematics, u, Qf, pts)
    return u, Qf, pts, orig, new


def _witness(u, Qf: RotationField, point, trial: int) -> dict:
    return {"trial": trial, "field": field_to_json(u), "rotation": Qf.to_json(),
            "point": [float(c) for c in point]}


def _as_model(model, params: Optional[ModelParams]) -> EnergyModel:
    if isinstance(model, EnergyModel):
        return model
    return get_model(model, params)


def _report(model_id, kind, cfg, worst, witness) -> ProbeReport:
    verdict = VIOLATED if worst > cfg.tolerance else HOLDS
    return ProbeReport(model_id, kind, verdict, float(worst), cfg.tolerance, cfg.trials,
                       cfg.seed, witness if verdict == VIOLATED else None)


def probe(model, kind, cfg: Optional[ProbeConfig] = None,
          params: Optional[ModelParams] = None) -> ProbeReport:
    """Search for violations of one invariance notion for one energy model.

    The worst violation over all trials and points is reported; the witness
    is the first point attaining it.
    """
    cfg = cfg or ProbeConfig()
    model = _as_model(model, params)
    kind = InvarianceKind.parse(kind)
    reason = applicable(model, kind)
    if reason:
        raise UsageError(f"{kind.value} does not apply to {model.id!r}: {reason}")
    if kind == InvarianceKind.BALANCE:
        return probe_balance(model.id, cfg, model.params)
    worst, witness = -1.0, None
    for t in range(cfg.trials):
        u, Qf, pts, orig, new = _cached_trial(cfg, kind, model.kinematics, t)
        v = energy_violation(model, orig, new)
        k = int(np.argmax(v))
        if v[k] > worst:
            worst, witness = float(v[k]), _witness(u, Qf, pts[k], t)
    return _report(model.id, kind, cfg, worst, witness)


def replay_witness(model, kind, witness: dict, params: Optional[ModelParams] = None) -> float:
    """Recompute the violation recorded in a witness from its serialized data."""
    model = _as_model(model, params)
    kind = InvarianceKind.parse(kind)
    u = field_from_json(witness["field"])
    Qf = RotationField.from_json(witness["rotation"])
    pts = np.atleast_2d(np.asarray(witness["point"], dtype=float))
    if kind == InvarianceKind.BALANCE:
        return float(balance_violation(model.id, u, Qf.constant, pts, model.params)[0])
    orig, new = transformed_jets(kind, model.kinematics, u, Qf, pts)
    return float(energy_violation(model, orig, new)[0])


# --------------------------------------------------------------------------
# balance form-invariance

@lru_cache(maxsize=256)
def _manufactured(model_id: str, params: ModelParams, u_key: tuple):
    u = corpus_field(*u_key)
    return manufactured_force(model_id, u, params)


def balance_violation(model_id: str, u, Q, points, params: Optional[ModelParams] = None,
                      force=None) -> np.ndarray:
    """Per-point residual of the rotated balance with a manufactured body force.

    The force ``f = -Div(total stress)(u)`` balances ``u`` exactly.  The
    rotated system is checked through ``Div_xi(total stress)(u#)(Q x) + Q f(x)``,
    which is the rotated force ``f#`` evaluated at ``xi = Q x``.  Each entry
    is ``max_i |r_i| / (1 + max_i |f_i|)``.
    """
    params = params or ModelParams()
    Q = T.as_matrix(Q)
    x = np.atleast_2d(np.asarray(points, dtype=float))
    f = manufactured_force(model_id, u, params) if force is None else force
    f_x = Evaluator(x)(f)
    us = sharp(u, Q)
    div_total = ops.div(stress_state(model_id, us, params).total)
    lhs = Evaluator(x @ Q.T)(div_total)
    r = lhs + f_x @ Q.T
    return np.max(np.abs(r), axis=-1) / (1.0 + np.max(np.abs(f_x), axis=-1))


def probe_balance(model_id: str, cfg: Optional[ProbeConfig] = None,
                  params: Optional[ModelParams] = None) -> ProbeReport:
    """Form-invariance of the balance of linear momentum under the sharp transform."""
    cfg = cfg or ProbeConfig()
    params = params or ModelParams()
    if model_id not in BALANCE_IDS:
        if model_id in MODEL_IDS:
            raise UsageError(f"balance probes need one of: {', '.join(BALANCE_IDS)}")
        raise UsageError(f"unknown model {model_id!r}")
    if cfg.rotation_source == "axis-angle-field":
        raise UsageError("balance probes need constant rotations")
    worst, witness = -1.0, None
    for t in range(cfg.trials):
        key = (cfg.seed, cfg.field_degree, cfg.coeff_range, t % cfg.corpus_size)
        u = corpus_field(*key)
        Qf = trial_rotation(cfg, t, local=False)
        pts = trial_points(cfg, t)
        v = balance_violation(model_id, u, Qf.constant, pts, params,
                              force=_manufactured(model_id, params, key))
        k = int(np.argmax(v))
        if v[k] > worst:
            worst, witness = float(v[k]), _witness(u, Qf, pts[k], t)
    return _report(model_id, InvarianceKind.BALANCE, cfg, worst, witness)


# --------------------------------------------------------------------------
# classification matrix

@dataclass
class ClassificationMatrix:
    config: ProbeConfig
    models: Tuple[str, ...]
    kinds: Tuple[InvarianceKind, ...]
    cells: Dict[Tuple[str, InvarianceKind], Optional[ProbeReport]]

    def verdict(self, model_id: str, kind) -> str:
        rep = self.cells[(model_id, InvarianceKind.parse(kind))]
        return NOT_APPLICABLE if rep is None else rep.verdict

    def mismatches(self) -> List[Tuple[str, str, str, str]]:
        out = []
        for (m, k), rep in self.cells.items():
            exp = EXPECTED.get((m, k), NOT_APPLICABLE)
            got = NOT_APPLICABLE if rep is None else rep.verdict
            if exp != got:
                out.append((m, k.value, exp, got))
        return out

    def matches_expected(self) -> bool:
        return not self.mismatches()

    def to_json(self) -> dict:
        cells = {}
        for m in self.models:
            row = {}
            for k in self.kinds:
                rep = self.cells[(m, k)]
                if rep is None:
                    row[k.value] = {"verdict": NOT_APPLICABLE}
                    continue
                cell = {"verdict": rep.verdict, "expected": EXPECTED.get((m, k), NOT_APPLICABLE),
                        "max_violation": rep.max_violation}
                if rep.witness is not None:
                    cell["witness"] = rep.witness
                row[k.value] = cell
            cells[m] = row
        c = self.config
        return {"schema_version": SCHEMA_VERSION, "seed": c.seed, "trials": c.trials,
                "tolerance": c.tolerance, "field_degree": c.field_degree,
                "corpus_size": c.corpus_size, "points_per_field": c.points_per_field,
                "models": list(self.models), "kinds": [k.value for k in self.kinds],
                "matches_expected": self.matches_expected(), "cells": cells}

    def to_markdown(self) -> str:
        head = "| model | " + " | ".join(k.value for k in self.kinds) + " |"
        sep = "|---" * (len(self.kinds) + 1) + "|"
        lines = [head, sep]
        for m in self.models:
            lines.append(f"| {m} | " + " | ".join(self.verdict(m, k) for k in self.kinds) + " |")
        return "\n".join(lines)


def run_classification_matrix(cfg: Optional[ProbeConfig] = None,
                              params: Optional[ModelParams] = None,
                              models=MODEL_IDS) -> ClassificationMatrix:
    """Probe every applicable (model, kind) pair."""
    cfg = cfg or ProbeConfig()
    params = params or ModelParams()
    cells: Dict[Tuple[str, InvarianceKind], Optional[ProbeReport]] = {}
    for mid in models:
        model = get_model(mid, params)
        for kind in KINDS:
            cells[(mid, kind)] = None if applicable(model, kind) else probe(model, kind, cfg)
    return ClassificationMatrix(cfg, tuple(models), KINDS, cells)
