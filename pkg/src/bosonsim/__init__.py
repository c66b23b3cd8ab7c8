"""bosonsim: frame-resolved sampling of interfering bosons.

Classical (positive-P) states factor into a shared per-frame geometry plus
independent particles; fixed-number states are sampled with genuinely
correlated sequential conditionals.  Closed-form pair-distance laws and
quadrature oracles validate every Monte-Carlo path.
"""

from ._core import BACKEND
from .bases import (DipolePair, Geometry, MixedLG, VortexPair,
                    averaged_one_body, one_body_density, parse_basis,
                    sample_particle)
from .errors import (BosonsimError, DegeneratePoint, DegenerateState,
                     InsufficientMultiplicity, MissingIntensity,
                     NotClassicalState, NumericalError, OrderTooLarge,
                     QuadratureNotConverged, SamplingStalled, ValidationError)
from .jointdensity import (AngularDensity, SpatialDensity, marginal_density,
                           pair_radial_angle_density, quadrature_oracle,
                           rho_eval, rho_eval_permsum, theta_eval_permsum,
                           theta_eval_sympoly)
from .observables import (EstimateResult, Histogram, estimate, ks_statistic,
                          ks_two_sample, pair_distance, projected_perimeter)
from .oracles import (ClosedFormDistribution, TabulatedDistribution,
                      closed_form_for, distance_dipole, distance_vortex1,
                      distance_vortex2, quadrature_distance)
from .sampler import (Frame, FrameBatch, SamplerConfig, mcmc_angles,
                      mcmc_points, read_frames_jsonl, sample_frames,
                      sample_geometry, write_frames_jsonl)
from .states import (Coherent, Fock, Mixture, RPCS, Thermal, correlator,
                     curly_c, effective_weights, format_state, parse_state,
                     w_thermal_t, z_norm)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "__version__",
    # states
    "Fock", "Thermal", "RPCS", "Coherent", "Mixture", "correlator", "curly_c",
    "z_norm", "effective_weights", "w_thermal_t", "parse_state", "format_state",
    # bases
    "VortexPair", "DipolePair", "MixedLG", "Geometry", "one_body_density",
    "averaged_one_body", "sample_particle", "parse_basis",
    # joint densities
    "AngularDensity", "SpatialDensity", "theta_eval_sympoly",
    "theta_eval_permsum", "rho_eval", "rho_eval_permsum", "marginal_density",
    "pair_radial_angle_density", "quadrature_oracle",
    # sampling
    "SamplerConfig", "Frame", "FrameBatch", "sample_frames", "sample_geometry",
    "mcmc_angles", "mcmc_points", "write_frames_jsonl", "read_frames_jsonl",
    # observables
    "Histogram", "EstimateResult", "estimate", "pair_distance",
    "projected_perimeter", "ks_statistic", "ks_two_sample",
    # oracles
    "ClosedFormDistribution", "TabulatedDistribution", "distance_vortex1",
    "distance_dipole", "distance_vortex2", "closed_form_for",
    "quadrature_distance",
    # errors
    "BosonsimError", "ValidationError", "NumericalError", "DegenerateState",
    "NotClassicalState", "OrderTooLarge", "MissingIntensity",
    "InsufficientMultiplicity", "DegeneratePoint", "SamplingStalled",
    "QuadratureNotConverged",
]
