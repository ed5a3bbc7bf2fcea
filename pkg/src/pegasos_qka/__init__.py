"""Quantum-kernel SVM training by stochastic subgradient descent with
simultaneous alignment of trainable feature-map parameters."""

from .statevector import (
    StateVector,
    apply_cnot,
    apply_rotation,
    inner_product,
    z_expectation,
    zero_state,
)
from .feature_map import (
    GateOp,
    KernelEstimate,
    KernelEvaluator,
    Layer,
    TrainableFeatureMap,
    chain_edges,
    composed_zero_probability,
    covariant_map,
    feature_states,
    kernel_matrix,
    kernel_sampled,
    map_from_text,
    map_to_text,
    prepare_feature_state,
    pseudo_kernel,
)
from .spsa import SpsaConfig, spsa_gradient, spsa_step
from .solver import (
    AlignedModel,
    RunTrace,
    StepReport,
    SupportRecord,
    accuracy,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .dataset import (
    CovariantDatasetSpec,
    DriftSchedule,
    DriftStream,
    FixedDataset,
    InfeasibleDatasetError,
    calibrate_threshold,
    class_balance,
    drift_theta,
    generate_dataset,
    load_dataset,
    margin_functional,
    sample_point,
    save_dataset,
    stream_sample,
)
from .dual import (
    DualSolution,
    NestedQkaResult,
    dual_decision_value,
    dual_objective,
    dual_train_accuracy,
    nested_qka,
    solve_dual,
)
from .config import ConfigError, ExperimentConfig, parse_config, validate_config

__version__ = "0.1.0"
