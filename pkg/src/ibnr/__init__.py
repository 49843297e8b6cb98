"""Discounted multivariate infinite-server (IBNR) processes with Markov-modulated batches.

Arrivals form a renewal process; the i-th arrival brings a batch X_i in
{0..K}^k driven by a finite Markov chain, and each batch stays in dimension
j for a service time L_ij.  The package computes joint (with the terminal
chain state) moments, workloads and transforms of the discounted occupancy
Z(t), analytically and by Monte Carlo.
"""
from .asymptotics import (
    limit_first_moment_general,
    limit_first_moment_joint,
    limit_first_moment_vector,
    limit_second_moment_joint,
    limit_workload_joint,
    limit_workload_vector,
    psi_hat_zero,
)
from .deterministic import (
    bounded_service_mgf,
    limit_first_moment_deterministic,
    limiting_mgf_deterministic,
    transient_first_moment_deterministic,
    transient_mgf_deterministic,
)
from .distributions import Deterministic, Exponential, Gamma, Zero, distribution_from_json
from .errors import (
    ConfigError,
    ConvergenceError,
    CoverageError,
    DimensionError,
    DomainError,
    EvaluationDomainError,
    IbnrError,
    IrreducibilityError,
    PreconditionError,
    PropagationError,
    StateSpaceTooLarge,
    StochasticityError,
)
from .kernel import ModelSpec, d2_pi_tilde, d_pi_tilde, pi_tilde, q_tilde
from .semimarkov import (
    SemiMarkovSpec,
    embed,
    modulated_first_moment,
    modulated_first_moment_by_last_switch,
    modulated_mgf,
    modulated_second_moment,
    modulated_workload,
    simulate_semimarkov,
)
from .simulator import EstimateReport, PathSample, estimate, simulate_path
from .statespace import (
    ChainSpec,
    StateSpace,
    chain_product_expectation,
    delta_matrix,
    enumerate_states,
    restricted_space,
    stationary_distribution,
)
from .targets import Target
from .transient import (
    QuadratureConfig,
    Trajectory,
    forcing_b_first,
    forcing_b_second,
    forcing_workload,
    psi_tilde_zero,
    solve_markov_renewal,
    transient_first_moment_poisson,
    transient_mgf_poisson,
    transient_second_moment_poisson,
    transient_workload_poisson,
)

__version__ = "0.1.0"
