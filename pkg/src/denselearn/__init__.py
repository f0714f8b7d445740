"""denselearn: backprop, feedback alignment, and difference target propagation
on plain and densely connected MLPs / ConvNets, with the MNIST experiment
harness (training loop, hyperparameter sweeps, CSV summaries)."""

from .network import ActivationTrace, NetworkSpec, ParameterSet, build_network, forward
from .rng import RngStream, derive_seed
from .rules import (DecoderSet, FeedbackSet, TargetSet, backward_from_output_grad,
                    bp_backward, build_decoders, build_feedback, dtp_decoder_grads,
                    dtp_forward_grads, dtp_targets, fa_backward, feedback_from_weights)
from .trainer import RunRecord, TrainConfig, evaluate, sgd_step, train_run
from .sweep import GridSpec, SweepResult, emit_depth_curve, emit_robustness_curve, \
    paper_grid, run_sweep

__all__ = [
    "ActivationTrace", "NetworkSpec", "ParameterSet", "build_network", "forward",
    "RngStream", "derive_seed",
    "DecoderSet", "FeedbackSet", "TargetSet", "backward_from_output_grad",
    "bp_backward", "build_decoders", "build_feedback", "dtp_decoder_grads",
    "dtp_forward_grads", "dtp_targets", "fa_backward", "feedback_from_weights",
    "RunRecord", "TrainConfig", "evaluate", "sgd_step", "train_run",
    "GridSpec", "SweepResult", "emit_depth_curve", "emit_robustness_curve",
    "paper_grid", "run_sweep",
]
