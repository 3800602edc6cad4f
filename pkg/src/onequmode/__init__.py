"""Simulation of one-qumode computation: a squeezed continuous-variable
control mode driving phase estimation, trace estimation and order finding."""

__version__ = "0.1.0"

from .spectrum import (
    ModularProblem,
    NonCoprimeError,
    PhaseSpectrum,
    SpectrumEntry,
    exact_normalized_trace,
    modular_spectrum,
    order,
    permutation_cycles,
    random_spectrum,
    single_phase,
)
from .qumode import (
    GaussianMixture,
    GridSpec,
    QumodeWavefunction,
    density_at,
    fft_oracle_distribution,
    momentum_distribution,
    sample_momentum,
)
from .hybrid_gate import (
    AdditionGate,
    DiagonalTerm,
    addition_gates,
    hybrid_phase,
    verify_addition_decomposition,
    verify_commuting_product,
)
from .estimation import (
    ExperimentConfig,
    PhaseEstimateReport,
    eigenvector_posterior,
    estimate_phases,
    measurement_budget,
    posterior_concentration,
    success_probability,
    time_energy_check,
)
from .dqc1 import F_overhead, TraceEstimate, estimate_trace, required_samples, variance_bounds
from .factoring import (
    BudgetExhausted,
    ClassicalRejection,
    FactorResult,
    OrderResult,
    continued_fraction_recover,
    exact_run_success_probability,
    factor,
    order_from_samples,
    run_bound,
    totient_bound_check,
)
from .resources import mean_photon_number, qudit_dimension, resource_report
