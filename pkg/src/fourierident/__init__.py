"""Identification of PDEs ``u_t = sum c * d^a/dx^a (u^b)`` from noisy data in the frequency domain."""

from .errors import *  # noqa: F401,F403
from .experiments import result_json, result_to_dict, run_ensemble, run_identify, summarize
from .fourier_system import (
    Dictionary,
    FourierSystem,
    SmoothingKernel,
    build_dictionary,
    build_system,
    choose_kernel,
    derivative_multiplier,
    smooth,
)
from .grid import Grid, NoiseSpec, Trajectory, add_noise, extend_mirror_even, extend_mirror_odd
from .io import load_trajectory, save_trajectory
from .metrics import Metrics, compute_metrics, load_truth, save_truth, truth_vector
from .pipeline import FinalResult, RunConfig, identify, prepare
from .regions import compute_threshold, core_region, find_meaningful_region, fit_transition_mode
from .regression import group_trim, normalized_least_squares, subspace_pursuit, trim_to_convergence
from .selection import energy_e1, energy_e2, select_core_region, select_sparsity
from .simulate import InitialCondition, PdeSpec, benchmark_spec, simulate

__version__ = "0.1.0"
