"""Variation, heat semigroups and Feynman-Kac tools on discrete manifolds."""

from .geometry import (DiscreteManifold, GeometryError, codifferential, exterior_derivative,
                       l1_norm, rescale_metric, site_inner, site_norm, site_pairing, vertex_inner)
from .heat import (HeatError, HeatOperator, apply_semigroup, build_heat_operator, heat_kernel,
                   heat_kernel_bound_check)
from .variation import (HeatflowCurve, VariationResult, VectorMeasure, bv_norm, density_profile,
                        measure_pair_apply, mollified_approximants, pointwise_variation_1d,
                        polar_decompose, variation_dual, variation_gradient_l1, variation_heatflow)
from .curvature import (OneFormHeatOperator, RicciDecomposition, apply_oneform_semigroup,
                        build_oneform_heat, conformal_perturbation, domination_check,
                        scalar_potentials, spectral_parts)
from .stochastic import (WalkModel, build_walk, feynman_kac, feynman_kac_exact,
                         kasminskii_certify, kato_modulus, sample_path)
from .vecmeasure import (FiniteVectorMeasure, complex_to_real, polar_decomposition_measure,
                         total_variation)
from .builtins import generate_builtin, generate_field

__version__ = "0.1.0"
