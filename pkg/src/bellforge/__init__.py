"""Construct, certify and quantum-test Bell-CH inequalities with binary outcomes."""

from .expr import (BellExpression, Bound, BoxPoint, ExpressionError, Form, Party, affine_flip, builtin, evaluate,
                   gen_ikk, relabel, substitute_bound, to_algebraic_form, to_probability_form)
from .lhv import LHVModel, is_valid_bellch, lhv_value, sample_lhv, vertex_max
from .proof import search, verify
from .quantum import Projector, QuantumModel, noise_resistance, probabilities, quantum_value
from .optimize import Objective, OptimizerConfig, grid_oracle, maximize, table_row

__version__ = "0.1.0"
