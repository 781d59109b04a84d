"""Uncertainty relations for quantum processes.

Testers (process POVMs), the Rényi overlap bound, and majorization bounds
built from conditional min-entropy SDPs.
"""
from .channels import QuantumChannel, Povm, random_cptp, state_prep_channel, validate_cptp
from .entropy import mu_relation, renyi_entropy
from .errors import (
    DimensionError,
    EnumerationCapError,
    InconsistencyError,
    InputError,
    NotPSDError,
    ProcuncError,
    SolverError,
    ValidationError,
)
from .harness import CampaignConfig, run_verification, state_case_regression, tightness_probe
from .majorization import BoundVectors, compute_bounds, flatness, lattice_bounds, majorizes, uur_check
from .sdp import hmin_exp_dual, hmin_exp_primal
from .tester import Tester, build_tester, extend, overlap_table, probabilities, state_tester

__version__ = "0.1.0"
