"""Atomic games, rainbow and blur constructions, and bases for finite
cylindric and relation algebra atom structures."""

from .structures import (CaAtomStructure, RaAtomStructure, StructuralError, ValidationReport,
                         blocked_ca, cs_atom_structure, maddux_ek23, one_atom_ca, one_atom_ra,
                         structure_from_json, structure_to_json, validate_ca, validate_ra)
from .games import (EXISTS, FORALL, UNDECIDED, GameConfig, audit_outcome, audit_proof_tree,
                    ef_pebble, solve_game, verify_script)
from .basis import (audit_basis, audit_relational_basis, find_basis, find_hyperbasis,
                    find_relational_basis, mat_n, project_hyperbasis)

__version__ = "0.1.0"
