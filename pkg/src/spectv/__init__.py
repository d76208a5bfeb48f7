"""Nonlinear spectral TV decomposition and image fusion toolkit."""

from .bandio import (FilterSpec, identity_filter_spec, load_bands,
                     load_field, load_filter_spec, load_landmarks,
                     make_filter_spec, parse_filter_spec, save_bands,
                     save_field, save_filter_spec, save_landmarks)
from .fusion import (FusionJob, StageError, fuse, fuse_with_spec,
                     preset_face_fusion, preset_object_insertion,
                     preset_style_transfer)
from .grid import (NumericalError, div, dirichlet_energy, grad,
                   gradient_matrix, laplace_solve_with_constraints, tv_value)
from .image import (lcc_to_rgb, load_image, offset_decode, offset_encode,
                    rgb_to_lcc, save_image)
from .masks import (RegionMaskSet, SpatialFilter, assemble_spatial_filter,
                    ellipse_mask, feather, landmark_region_mask,
                    uniform_spatial_filter)
from .registration import (LandmarkSet, RegistrationField, identity_field,
                           solve_field, warp, warp_decomposition)
from .rof import (SolverOptions, SolverReport, extract_subgradient,
                  solve_bregman_subproblem, subgradient_certificate)
from .transform import (BandFilter, SpectralDecomposition, apply_filter,
                        band_masses, decompose_gf, decompose_iss,
                        default_iss_schedule, gf_flow, reconstruct)

__version__ = "0.1.0"

__all__ = [
    "BandFilter", "FilterSpec", "FusionJob", "LandmarkSet", "NumericalError",
    "RegionMaskSet", "RegistrationField", "SolverOptions", "SolverReport",
    "SpatialFilter", "SpectralDecomposition", "StageError",
    "apply_filter", "assemble_spatial_filter", "band_masses",
    "decompose_gf", "decompose_iss", "default_iss_schedule",
    "dirichlet_energy", "div", "ellipse_mask", "extract_subgradient",
    "feather", "fuse", "fuse_with_spec", "gf_flow", "grad",
    "gradient_matrix", "identity_field", "identity_filter_spec",
    "laplace_solve_with_constraints", "landmark_region_mask", "lcc_to_rgb",
    "load_bands", "load_field", "load_filter_spec", "load_image",
    "load_landmarks", "make_filter_spec", "offset_decode", "offset_encode",
    "parse_filter_spec", "preset_face_fusion", "preset_object_insertion",
    "preset_style_transfer", "reconstruct", "rgb_to_lcc", "save_bands",
    "save_field", "save_filter_spec", "save_image", "save_landmarks",
    "solve_bregman_subproblem", "solve_field", "subgradient_certificate",
    "tv_value", "uniform_spatial_filter", "warp", "warp_decomposition",
]
