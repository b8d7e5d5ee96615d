from .normalize import Normalizer
from .windows import build_training_arrays, episode_windows
from .mlp import MLP, Adam
from .diffusion import (
    PolicyConfig,
    TrainedPolicy,
    beta_schedule,
    cosine_alpha_bar,
    forward_corrupt,
    sample_chunk,
    sinusoidal_embedding,
    train_policy,
)
from .store import (
    list_policies,
    load_policy,
    policy_fingerprint,
    save_policy,
)
from .executor import RolloutResult, TickLog, run_receding_horizon, rollout_in_sim

__all__ = [
    "Adam",
    "MLP",
    "Normalizer",
    "PolicyConfig",
    "RolloutResult",
    "TickLog",
    "TrainedPolicy",
    "beta_schedule",
    "build_training_arrays",
    "cosine_alpha_bar",
    "episode_windows",
    "forward_corrupt",
    "list_policies",
    "load_policy",
    "policy_fingerprint",
    "rollout_in_sim",
    "run_receding_horizon",
    "sample_chunk",
    "save_policy",
    "sinusoidal_embedding",
    "train_policy",
]
