"""Tensor-field calculus and SO(3)-invariance probes for gradient elasticity."""

from .errors import PreconditionError, UsageError
from .tensor import (EPS, CartanParts, Rotation, anti, axl, axl_skew, cartan_decompose, inner,
                     levi_civita_identity_check, rayleigh, rotation_from_integer_quaternion)
from .expr import (Expr, RotationField, compose_linear, diff, evaluate, field,
                   random_polynomial_field)
from .models import DisplacementJet, EnergyModel, ModelParams, get_model
from .probes import (InvarianceKind, ProbeConfig, ProbeReport, probe, probe_balance,
                     replay_witness, run_classification_matrix)
from .transforms import RULES, flat, sharp, verify_rule

__version__ = "0.1.0"
