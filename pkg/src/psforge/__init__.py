"""Discrete pseudospherical surfaces from discrete potentials.

Loop-group elements are kept as exact chains of elementary factors, Birkhoff
splits are done by swapping adjacent factors, and surfaces come out of the
Sym formula as quad meshes.
"""
from ._backend import BACKEND
from .algebra import from_su2, inner_product, is_special_unitary, to_su2
from .dalembert import (
    FrameGrid,
    GeneralizedPotentials,
    NormalizedPotentials,
    extended_frame,
    frame_from_generalized,
    phase_k,
    revolution_potentials,
    solve_frame_minus,
    solve_frame_plus,
    xi_minus,
    xi_plus,
)
from .factors import (
    FactorChain,
    MinusFactor,
    PhaseFactor,
    PlusFactor,
    SplitState,
    absorb_phase,
    birkhoff_split,
    eval_chain,
    eval_factor,
    invert_factor,
    lambda_derivative_chain,
    swap_plus_minus,
)
from .surface import (
    HirotaOracle,
    SurfaceMesh,
    VerificationReport,
    build_mesh,
    check_discrete_ps,
    extract_transitions,
    fit_lattice,
    hirota_residual,
    hirota_step,
    sym_point,
)

__version__ = "0.1.0"
