"""Stretched Sierpinski gasket: harmonic coordinates, energy forms, measures.

The package builds the level-l prefractal of a gasket whose three
contractions are stretched by a per-level sequence, joined by straight
cables; assembles the associated quadratic form (triangle part plus
cable part, with exact limit weights when the stretch sequence has a
convergent tail product); verifies discrete harmonicity of affine
coordinates; computes cylinder measures through a transfer operator in
matrix space; and evaluates a measurable Laplacian with integration by
parts diagnostics.
"""

from .params import Constants, DEFAULT_CONSTANTS, ExpTail, ParamSeq, seq_from_mapping
from .errors import (
    ConfigError,
    DegenerateCable,
    DepthCapExceeded,
    GasketError,
    NonHarmonicError,
    PolyParseError,
    StarNotClosed,
    TailProductZero,
)
from .geometry import (
    AffineMap2,
    EdgeId,
    HARMONIC_RATIO,
    Segment,
    base_vertices,
    barycenter,
    cable_prefactor,
    cable_prefactor_limit,
    cable_segments,
    compose,
    count_edges,
    iter_cables,
    iter_words,
    prefractal_edges,
    triangle_edge_prefactor,
    triple,
    word_index,
    word_maps,
    word_point,
    word_table,
)
from .scalarfield import (
    Poly2,
    affine,
    corner_values,
    parse,
    sup_bounds,
    to_string,
    vanishes_at_corners,
    vanishing_at_ABC,
    vanishing_cubic,
)
from .energy import (
    EnergyReport,
    QuadratureRule,
    cable_energy,
    cable_tail_bound,
    convergence_rows,
    energy1,
    energy2,
    energy2_limit,
    energy_total,
    get_quadrature,
    recurrence_residual,
    selfsimilar_residual,
)
from .harmonicity import (
    HarmonicityReport,
    VertexStar,
    boundary_vector,
    canonical_vertex,
    harmonic_report,
    harmonic_residual,
    nd_gamma,
    nd_gamma_of,
    vertex_stars,
    weak_laplacian_h1,
    weak_pairing,
)
from .kusuoka import (
    CableMass,
    CylinderMass,
    adjoint_aggregate,
    cable_mass,
    cable_masses,
    cylinder_masses,
    energy_via_measure,
    gibbs_tau,
    kappa,
    kappa_table,
    perron,
    perron_report,
    ruelle_apply,
    sym_operator3,
    tau_table,
    total_cable_mass,
)
from .laplacian import LaplacianSample, ibp_residual, ibp_table, laplacian_samples, teplyaev

__version__ = "0.1.0"

__all__ = [
    "AffineMap2",
    "CableMass",
    "Constants",
    "CylinderMass",
    "ConfigError",
    "DEFAULT_CONSTANTS",
    "DegenerateCable",
    "DepthCapExceeded",
    "EdgeId",
    "EnergyReport",
    "ExpTail",
    "GasketError",
    "HARMONIC_RATIO",
    "HarmonicityReport",
    "LaplacianSample",
    "NonHarmonicError",
    "ParamSeq",
    "Poly2",
    "PolyParseError",
    "QuadratureRule",
    "Segment",
    "StarNotClosed",
    "TailProductZero",
    "VertexStar",
    "adjoint_aggregate",
    "affine",
    "base_vertices",
    "boundary_vector",
    "cable_energy",
    "cable_mass",
    "cable_masses",
    "cable_tail_bound",
    "canonical_vertex",
    "convergence_rows",
    "corner_values",
    "count_edges",
    "cylinder_masses",
    "energy1",
    "energy2",
    "energy2_limit",
    "energy_total",
    "energy_via_measure",
    "get_quadrature",
    "gibbs_tau",
    "harmonic_report",
    "harmonic_residual",
    "ibp_residual",
    "ibp_table",
    "barycenter",
    "cable_prefactor",
    "cable_prefactor_limit",
    "cable_segments",
    "compose",
    "iter_cables",
    "iter_words",
    "kappa",
    "kappa_table",
    "laplacian_samples",
    "nd_gamma",
    "nd_gamma_of",
    "parse",
    "perron",
    "perron_report",
    "prefractal_edges",
    "recurrence_residual",
    "ruelle_apply",
    "selfsimilar_residual",
    "seq_from_mapping",
    "sup_bounds",
    "sym_operator3",
    "tau_table",
    "teplyaev",
    "to_string",
    "total_cable_mass",
    "triangle_edge_prefactor",
    "triple",
    "vanishes_at_corners",
    "vanishing_at_ABC",
    "vanishing_cubic",
    "vertex_stars",
    "weak_laplacian_h1",
    "weak_pairing",
    "word_index",
    "word_maps",
    "word_point",
    "word_table",
]
