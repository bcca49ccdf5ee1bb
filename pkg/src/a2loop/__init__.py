"""Dilute A2 loop and RSOS lattice models: transfer matrices on standard
modules, their fusion hierarchy, and numerical certification of the
functional relations between them."""

from .hierarchy import HierarchyContext, ResampleError, fused_T
from .linkstate import LinkState, Sector, enumerate_states, sectors
from .relations import IdentityCheck
from .scalars import ModelParams, ParameterError, RootOfUnity, SingularityError
from .transfer import SizeError, TransferMatrix, build_braid, build_elementary

__all__ = [
    "HierarchyContext",
    "IdentityCheck",
    "LinkState",
    "ModelParams",
    "ParameterError",
    "ResampleError",
    "RootOfUnity",
    "Sector",
    "SingularityError",
    "SizeError",
    "TransferMatrix",
    "build_braid",
    "build_elementary",
    "enumerate_states",
    "fused_T",
    "sectors",
]
