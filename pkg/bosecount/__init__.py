__version__=(0,1,0)
__author__='Alex Miłowski'
__author_email__='alex@milowski.com'
from .utils import DetectorError, ConfigurationError, RegimeError, QuadratureFailure, SolverFailure, PartialFractionInstability, OracleDisagreement, set_log_level, total_variation
from .model import Method, CountDistribution, Moments, Deviation, RunManifest
from .params import PhysicalConfig, TrapScales, ReducedParams, DetectorParams, derive_trap_scales, trap_scales_approx, resonance_wavenumber, saturation, saturation_from_q, rabi_for_saturation, reduced_params, tau_for_probability, recoil_condition, detector_params, load_config
from .amplitudes import spin_operators, matrix_element_closed, matrix_element_bruteforce, psi_exact, psi_lowest_order, WaitingTimeDensity, waiting_density, waiting_density_for, transition_probability_integral
from .sector import SectorBasis, EffectiveHamiltonianSector, build_heff, build_heff_zero_order, jump_operator, propagate, exact_count_statistics
from .counting import LaplaceRational, waiting_laplace, survival_laplace, survival_laplace_terms, product_laplace, counting_chain, count_distribution, count_distributions, count_distribution_partial_fractions, cross_check, efficiency, moments
from .stochastic import RngStream, TrajectorySample, EmpiricalDistribution, sample_waiting_time, rejection_sample_waiting_time, sample_trajectory, simulate_counts
from .statistics import PhotonStatistics, DetectorResponse, fock, vacuum, coherent, thermal, detector_response, binomial_response, mix, binomial_reference, mandel_counts, poisson_reference, bose_reference, deviation
