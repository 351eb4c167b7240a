"""Sparse signal recovery by constrained lp^p/lq^p norm-ratio minimization.

Library layout:

- core: domain types, norms, instance (de)serialization
- prox: soft and generalized soft-thresholding operators
- solver: prox-linear Dinkelbach method with an inner ADMM
- theory: recovery-guarantee calculators and oracles
- datagen: reproducible matrices, signals, and instances
- harness: Monte Carlo benchmark runner and persistence
- report: figure rendering for benchmark and bound outputs
- cli: the ratiosparse command-line tool
"""

from .core import (RatioParams, ProblemInstance, SparsityProfile,
                   lp_norm_pow, ratio_objective, best_k_split,
                   save_instance, load_instance)
from .prox import GstParams, gst_threshold, gst_apply, soft_threshold
from .solver import (DlpaConfig, SolverState, SolveResult,
                     min_norm_feasible, linearization_coefficient,
                     inner_admm_solve, l1_baseline_solve, dlpa_solve)
from .theory import (TheoryInput, ZeroPointResult, BoundReport,
                     gnrc, uniform_gnrc_bound, local_optimality_nsp_bound,
                     zero_point, ric_threshold_new, ric_threshold_zhu,
                     error_bound_new, error_bound_zhu,
                     riprop_constants, riponly_constants, bound_report,
                     worst_case_beta, exact_ric, nullspace_ratio_estimate,
                     check_uniform_recovery_condition)
from .datagen import (MatrixSpec, SignalSpec, derive_rng,
                      gen_matrix, gen_signal, gen_instance,
                      matched_signal_spec)
from .harness import (ExperimentPlan, TrialRecord, classify_outcome,
                      snr_db, run_experiment)

__version__ = "0.1.0"
