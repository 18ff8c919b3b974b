"""Stokes-analytic invariants of linear q-difference systems with integral
slopes: formal gauges, theta-weighted directional sums, Stokes matrices,
alien derivations and the level-by-level reconstruction."""

__version__ = "0.1.0"

from .blocks import BlockStructure
from .config import TOL, RunConfig, Tolerances
from .corpus import load_example
from .elliptic import EllipticPoint, elliptic_class
from .errors import QStokesError
from .galois import NilpotentBlockMatrix, alien_derivation, all_alien_derivations, spectral_project
from .io import read_system, write_system
from .reconstruction import alien_targets, reconstruct_full, reconstruct_level, truncate_to_level
from .series import TruncatedLaurentSeries
from .summation import directional_sum, eval_sum, formal_gauge, stokes_matrix
from .system import QSystem, dual, normalize, resonance_set, tensor, validate
from .theta import ThetaContext, theta_eval

__all__ = [
    "BlockStructure", "EllipticPoint", "NilpotentBlockMatrix", "QStokesError", "QSystem", "RunConfig",
    "TOL", "ThetaContext", "Tolerances", "TruncatedLaurentSeries", "alien_derivation", "alien_targets",
    "all_alien_derivations", "directional_sum", "dual", "elliptic_class", "eval_sum", "formal_gauge",
    "load_example", "normalize", "read_system", "reconstruct_full", "reconstruct_level", "resonance_set",
    "spectral_project", "stokes_matrix", "tensor", "theta_eval", "truncate_to_level", "validate",
    "write_system",
]
