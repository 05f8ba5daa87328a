"""Two-region image segmentation driven by a joint cartoon-texture evolution.

The main entry points are :func:`decompose` (cartoon-texture split),
:func:`segment` (the ADMM segmentation of the cartoon) and the texture-free
baselines :func:`segment_cen` and :func:`segment_spareg`.
"""
from ._kernels import BACKEND
from .baselines import LambdaMap, build_lambda_map, segment_cen, segment_spareg
from .decomposition import Decomposition, decompose
from .metrics import bde, gce, rand_index, voi
from .phantoms import PhantomSpec, make_phantom
from .solver import SegmentationResult, SolverParams, segment

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Decomposition",
    "LambdaMap",
    "PhantomSpec",
    "SegmentationResult",
    "SolverParams",
    "bde",
    "build_lambda_map",
    "decompose",
    "gce",
    "make_phantom",
    "rand_index",
    "segment",
    "segment_cen",
    "segment_spareg",
    "voi",
]
