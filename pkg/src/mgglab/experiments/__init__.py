from .detection import (DetectionTrialSpec, TauEstimate, default_box_side,
                        detection_neglog_curve, ensemble_conditional_survival,
                        estimate_M, estimate_M_prime, run_detection,
                        run_single_node_tau, sausage_oracle)
from .percolation import PercolationTrialSpec, run_percolation
from .broadcast import BroadcastTrialSpec, giant_overlap_frequency, run_broadcast
from .diagnostics import dense_cell_diagnostic, escape_diagnostic

__all__ = [
    "DetectionTrialSpec", "TauEstimate", "default_box_side",
    "detection_neglog_curve", "ensemble_conditional_survival",
    "estimate_M", "estimate_M_prime", "run_detection", "run_single_node_tau",
    "sausage_oracle", "PercolationTrialSpec", "run_percolation",
    "BroadcastTrialSpec", "giant_overlap_frequency", "run_broadcast",
    "dense_cell_diagnostic", "escape_diagnostic",
]
