# coding: utf-8
#
# This code is part of loopsoup.
#
# Copyright (c) 2026, The loopsoup developers
#
# This code is licensed under the MIT License. The copyright notice in the
# LICENSE file in the root directory and this permission notice shall
# be included in all copies or substantial portions of the Software.

"""Random walk loop soups on square-lattice domains, their winding fields and
exact lattice correlations.

Submodules
----------

.. autosummary::
   loopsoup.utils
   loopsoup.shape
   loopsoup.lattice
   loopsoup.exact
   loopsoup.sampler
   loopsoup.fields
   loopsoup.analysis
   loopsoup.experiments
   loopsoup.cli
   loopsoup.plotting

"""

from .utils import (
    logger,
    LoopSoupError,
    ConfigurationError,
    DomainError,
    DefectLineError,
    ParameterError,
    NumericalError,
    pairwise_sum,
)

from .shape import AbstractShape, Square, Disk, FaceList, shape_from_dict
from .lattice import (
    DiscreteDomain,
    DualGraph,
    DefectLine,
    TransitionMatrix,
    defect_line,
    build_domain,
    build_transition_matrix,
    spectral_radius,
)
from .exact import (
    LoopMass,
    log_det_one_minus,
    total_loop_mass,
    parity_constrained_mass,
    parity_pattern_masses,
    n_point_function,
    winding_twisted_mass,
    winding_n_point_function,
    greens_function,
    conformal_radius,
    lattice_conformal_radius,
    griffiths_check,
    boundary_mass_difference,
    nongaussianity_residual,
    enumerate_loop_masses,
)
from .sampler import (
    LatticeLoop,
    LoopSoup,
    LoopSampler,
    make_rng,
    sample_loop_soup,
    thin_soup,
    sample_dgff,
    sample_ising_dual,
    sample_spin_via_dgff_ising,
    sample_spin_via_dgff_coins,
    sample_massive_halfplane_field,
)
from .fields import (
    winding_number,
    winding_field,
    spin_field,
    cutoff_winding_field,
    occupation_field,
    loop_hull,
)
from .analysis import (
    Estimate,
    jackknife,
    mc_correlation,
    scaling_exponent_fit,
    conformal_covariance_fit,
    boundary_perturbation_probability,
    twopoint_decomposition,
    spectral_basis,
    sobolev_minus_alpha_norm,
    sobolev_cauchy_diagnostic,
    reflection_positivity_check,
)

try:
    from ._version import version as __version__
except ImportError:
    __version__ = "0.0.0"
