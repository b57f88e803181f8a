"""Frequency-domain solver and exponential-stability certification for
linear evolutionary equations on finite-dimensional state spaces."""

from .errors import (CertificationError, ConfigError, EdgeMassError,
                     EdgeMassWarning, GridMismatchError,
                     KernelAdmissibilityError, SingularFrequencyError)
from .signals import (Signal, SpectralSignal, TimeGrid, antiderivative,
                      derivative, edge_mass, fourier_laplace, gaussian_pulse,
                      inverse_fourier_laplace, signal_from_csv, signal_to_csv,
                      step_exp, support_lower_bound, translate, weighted_inner,
                      weighted_norm)
from .material import (CustomLaw, DaeLaw, DelayLaw, IntegroLaw, Kernel,
                       KernelMode, eval_frequency_operator, eval_symbol,
                       hermitian_part_min_eig, kernel_eval, kernel_hat,
                       kernel_weighted_l1, law_family, shifted_symbol)
from .spatial import (MixedTypeSystem, SpatialOperator, build_grad_1d,
                      build_mixed_type_system, check_maximal_monotone,
                      indicators_from_intervals)
from .certify import (CertificationReport, KernelConditionReport,
                      SamplingConfig, certify, check_kernel_conditions,
                      closed_form_rate, dae_rate, delay_rate, integro_rate,
                      solvability_constant, solvability_lower_bound)
from .solver import (EvolutionaryProblem, IvpProblem, apply_forward,
                     convolve_time, cutoff_phi, ivp_assemble_rhs, ivp_solve,
                     solve, solve_integro)
from .analysis import (DecayFit, causality_check, fit_decay_rate,
                       profile_to_csv, verify_stability, weighted_norm_profile)

__version__ = "0.1.0"
