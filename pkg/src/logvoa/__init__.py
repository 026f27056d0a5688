"""Exact symbolic engine for the Heisenberg vertex algebra M(1)_a, its
logarithmic modules M(1)_a (x) Omega and their explicit logarithmic
intertwining operators."""

__version__ = "0.1.0"

from .scalar import (QSeries, Rational, central_charge, contragredient_weight_identity,
                     eta_inverse_series, format_rational, lowest_weight, parse_rational,
                     partition_count)
from .fock import (FockState, ModuleVector, OmegaSpec, WeightInfo, apply_h, apply_L, basis,
                   jordan_structure_L0, partitions, vacuum_space, weight_info)
from .logseries import (IncompatibleOffset, LogSeries, Mode, TruncationWindow, WindowExceeded,
                        add, apply_mode, coefficient, ddx, depth, log_derivative)
from .intertwiner import (CheckResult, DegenerateParameters, IndexOutOfRange, IntertwinerSpec,
                          NotEquivariant, NothingToLower, OperatorSeries, canonical_intertwiner,
                          check_h_bracket, check_L_minus1, depth_bound, derived_operator,
                          e_minus_apply, e_plus_apply, extend_from_vacuum, f_map,
                          int_minus_apply, int_plus_apply, jordan_exp_apply, mock_log_check)
from .virstruct import (SingularVector, StructureDiagram, character_check, check_L0_jordan,
                        fusion_span_check, hidden_intertwiner_check, lift_chain, singular_basis,
                        structure_diagram, vertex_operator_apply, vir_submodule)

__all__ = [
    "QSeries",
    "Rational",
    "central_charge",
    "contragredient_weight_identity",
    "eta_inverse_series",
    "format_rational",
    "lowest_weight",
    "parse_rational",
    "partition_count",
    "FockState",
    "ModuleVector",
    "OmegaSpec",
    "WeightInfo",
    "apply_h",
    "apply_L",
    "basis",
    "jordan_structure_L0",
    "partitions",
    "vacuum_space",
    "weight_info",
    "IncompatibleOffset",
    "LogSeries",
    "Mode",
    "TruncationWindow",
    "WindowExceeded",
    "add",
    "apply_mode",
    "coefficient",
    "ddx",
    "depth",
    "log_derivative",
    "CheckResult",
    "DegenerateParameters",
    "IndexOutOfRange",
    "IntertwinerSpec",
    "NotEquivariant",
    "NothingToLower",
    "OperatorSeries",
    "canonical_intertwiner",
    "check_h_bracket",
    "check_L_minus1",
    "depth_bound",
    "derived_operator",
    "e_minus_apply",
    "e_plus_apply",
    "extend_from_vacuum",
    "f_map",
    "int_minus_apply",
    "int_plus_apply",
    "jordan_exp_apply",
    "mock_log_check",
    "SingularVector",
    "StructureDiagram",
    "character_check",
    "check_L0_jordan",
    "fusion_span_check",
    "hidden_intertwiner_check",
    "lift_chain",
    "singular_basis",
    "structure_diagram",
    "vertex_operator_apply",
    "vir_submodule",
]
