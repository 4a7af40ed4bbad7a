"""Split-inference toolkit: local first layer, dropped activation outputs,
and the reconstruction attacks that measure the defense."""

from ._core import (  # noqa: F401
    Activation,
    Dataset,
    DropMask,
    DropPolicy,
    InvertMode,
    MaskSeeding,
    MlpModel,
    SplitPlan,
    SweepRow,
    TrainConfig,
    brute_force_combinations,
    client_forward,
    drop_sweep,
    evaluate,
    forward_probs,
    front_slice,
    invert_dropped,
    invert_exact,
    kl_divergence_image,
    load_mnist_idx,
    load_model,
    make_mask,
    make_mlp,
    overlap_probability,
    rear_slice,
    save_model,
    seed_from_input,
    server_forward,
    synth_blobs,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
