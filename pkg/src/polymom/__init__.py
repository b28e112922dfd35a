"""polymom: moments of convex polytopes and vertex reconstruction from
axial moments."""

from .config import RunConfig
from .geometry import (
    Direction,
    Polytope,
    TangentCone,
    fan_triangulate_2d,
    polygon_cones,
    sample_generic_direction,
    simplex_cones,
    validate_polytope,
)
from .moments import (
    MomentSequence,
    PolytopeMomentOracle,
    SequenceMomentOracle,
    add_noise,
    axial_moment_brion,
    axial_moment_brion_density,
    axial_moment_direct,
    companion_identity_residual,
    moment_sequence,
    monomial_moment,
    scaled_moment_vector,
)
from .numeric import EXACT, FLOAT, Jet, MultiPoly, apply_diff_operator, poly_parse
from .prony import (
    HankelSystem,
    PronyPolynomial,
    ProjectionSet,
    build_hankel,
    minimal_kernel_vector,
    projections_from_moments,
    rank_and_kernel,
    roots_exact,
    roots_float,
)
from .reconstruct import (
    VertexSet,
    assemble_vertices,
    choose_beta,
    match_frugal_d_plus_1,
    match_projections,
    reconstruct,
    reconstruct_from_sequences,
)
from .univar import g_from_f, interpolate_fab, vertices_univar

__version__ = "0.1.0"

__all__ = [
    "EXACT",
    "FLOAT",
    "Direction",
    "HankelSystem",
    "Jet",
    "MomentSequence",
    "MultiPoly",
    "Polytope",
    "PolytopeMomentOracle",
    "ProjectionSet",
    "PronyPolynomial",
    "RunConfig",
    "SequenceMomentOracle",
    "TangentCone",
    "VertexSet",
    "add_noise",
    "apply_diff_operator",
    "assemble_vertices",
    "axial_moment_brion",
    "axial_moment_brion_density",
    "axial_moment_direct",
    "build_hankel",
    "choose_beta",
    "companion_identity_residual",
    "fan_triangulate_2d",
    "g_from_f",
    "interpolate_fab",
    "match_frugal_d_plus_1",
    "match_projections",
    "minimal_kernel_vector",
    "moment_sequence",
    "monomial_moment",
    "poly_parse",
    "polygon_cones",
    "projections_from_moments",
    "rank_and_kernel",
    "reconstruct",
    "reconstruct_from_sequences",
    "roots_exact",
    "roots_float",
    "sample_generic_direction",
    "scaled_moment_vector",
    "simplex_cones",
    "validate_polytope",
    "vertices_univar",
]
