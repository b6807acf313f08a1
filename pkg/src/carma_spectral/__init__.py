"""Spectral analysis of CARMA processes observed on irregular grids.

Simulation of Levy-driven CARMA(p,q) paths on random non-equidistant
high-frequency grids, trapezoidal truncated Fourier transforms, exact
finite-horizon second moments, and Monte Carlo verification of the limiting
distribution theory.
"""

from .drivers import (
    Brownian,
    RngStream,
    TwoSidedPoisson,
    VarianceGamma,
    Zero,
    driver_from_dict,
    driver_to_dict,
    sample_increment,
    sample_increments,
    variance_rate,
)
from .fourier import (
    FtSample,
    fine_ft_oracle,
    ft_value,
    integrate_trapezoid,
    theoretical_modsq_mean,
    theoretical_product_mean,
    trapezoid_error_bound,
    trapezoid_weights,
    truncated_ft,
)
from .grids import FineGrid, ObservationGrid, joint_refinement, non_equidistant_grid
from .linalg import NumericalError
from .mc import (
    MCConfig,
    MCReport,
    build_report,
    convergence_study,
    covariance_check,
    cross_frequency_independence,
    distribution_suite,
    ks_critical,
    ks_statistic,
    qq_data,
    run_mc,
)
from .model import CarmaSpec, LimitLaw, car1, carma21
from .simulate import (
    SamplePath,
    burn_in_horizon,
    euler_path,
    restrict_to_observations,
    sample_stationary_initial,
    simulate_path,
)

__version__ = "0.1.0"
