"""Numerical laboratory for the mean-field limit of dilute Bose gases.

Radial pair potentials and their N-scalings, zero-energy scattering, smeared
potentials, counting weights, a Gross-Pitaevskii solver and an exact few-body
solver, tied together by an experiment harness.
"""
from .potentials import (DomainError, RadialProfile, ScaledPotential, classify, load_profile,
                         profile_from_dict, scale, scale_mu, shells, square_barrier, tabulated)
from .scattering import (ParameterError, ResolutionError, SolverError, build_compensator,
                         g_norms, microstructure, scat, zero_energy_state)
from .smearing import SmearedPair, build_smeared, h_norms
from .weights import WeightVector, build_m_family, check_bounds, constant_weights, n_weights
from .gp import Field, TrapSchedule, ground_state, energy, evolve as evolve_gp
from .manybody import (CapacityError, FockState, Hamiltonian, PairPotential, ProjectorContext,
                       alpha, alpha_prime, product_state)
from .harness import ExperimentConfig, TrendReport, run, validate

__version__ = "0.1.0"
