"""Numerical laboratory for lambda-omega lattice dynamical systems.

Planar lattices of coupled oscillators z' = alpha * (neighbour differences)
+ z (lambda(|z|) + i omega(|z|)): steady families (synchronous, phase-winding,
rotating core defects), the linearized coupling operators and their
semigroups, discrete norm and difference-seminorm machinery, and scripted
decay-rate experiments with power-law and exponential fitting.
"""

from .errors import (ConfigError, ConstructionError, ConvergenceError, FitError,
                     IntegrationError, SingularityError, SnapshotFormatError)
from .grid import DIRECTIONS, Boundary, ComplexField, LatticeGrid, PolarField, rotate_quarter
from .model import LambdaSpec, ModelParams, OmegaSpec
from .norms import lp_norm, neighbour_sum_lp, norm_report, qp_seminorm
from .steady import (SteadyState, make_doubly_periodic, make_traveling_wave,
                     make_trivial, rotating_wave_continuation, solve_rotating_wave,
                     solve_uniform_amplitude, validate_steady)
from .linops import (CouplingOperator, DecayFit, build_operator, evolve_semigroup,
                     fit_decay, measure_decay_suite, coupling_graph, plain_laplacian)
from .experiments import (DecayExperimentReport, ManifoldApprox, MpScan,
                          check_rotational_identity, gaussian_bump,
                          run_manifold_attraction, run_phase_decay,
                          scan_hypothesis4, solve_critical_manifold)
from .snapshots import load_snapshot, save_snapshot

__version__ = "0.1.0"

__all__ = [
    "Boundary", "ComplexField", "ConfigError", "ConstructionError",
    "ConvergenceError", "CouplingOperator", "DecayExperimentReport", "DecayFit",
    "DIRECTIONS", "FitError", "IntegrationError", "LambdaSpec", "LatticeGrid",
    "ManifoldApprox", "ModelParams", "MpScan", "OmegaSpec", "PolarField",
    "SingularityError", "SnapshotFormatError", "SteadyState", "build_operator",
    "check_rotational_identity", "coupling_graph", "evolve_semigroup", "fit_decay",
    "gaussian_bump", "load_snapshot", "lp_norm", "make_doubly_periodic",
    "make_traveling_wave", "make_trivial", "measure_decay_suite",
    "neighbour_sum_lp", "norm_report", "plain_laplacian", "qp_seminorm",
    "rotate_quarter", "rotating_wave_continuation", "run_manifold_attraction",
    "run_phase_decay", "save_snapshot", "scan_hypothesis4",
    "solve_critical_manifold", "solve_rotating_wave", "solve_uniform_amplitude",
    "validate_steady",
]
