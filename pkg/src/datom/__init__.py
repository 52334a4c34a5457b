"""Deformable-module lattice robots: geometry, motion rules, planning and simulation."""

from .geometry import DatomParams, derive_params, linkage_pose
from .gradient import DistanceField, best_next, compute_field, descend
from .lattice import CellPos, Configuration, ModuleState, is_connected, load_config
from .motion import MotionAction, MotionKind, apply, candidate_actions, inverse, validate, valid_actions
from .simkernel import SimParams, SimTrace, run

__all__ = [
    "CellPos",
    "Configuration",
    "DatomParams",
    "DistanceField",
    "ModuleState",
    "MotionAction",
    "MotionKind",
    "SimParams",
    "SimTrace",
    "apply",
    "best_next",
    "candidate_actions",
    "compute_field",
    "derive_params",
    "descend",
    "inverse",
    "is_connected",
    "linkage_pose",
    "load_config",
    "run",
    "valid_actions",
    "validate",
]
