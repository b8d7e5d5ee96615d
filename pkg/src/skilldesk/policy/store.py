"""Content-addressed on-disk policy storage.

One ``.npz`` per policy holding the config (as JSON), the normalizer
bounds, every weight array, and the training loss curve. The policy id
is a truncated SHA-256 over a canonical byte serialization, so saving
the same trained policy always lands on the same id.
"""

from __future__ import annotations

import hashlib
import io
import json
import os

import numpy as np

from ..errors import FormatError, PolicyMissing
from .diffusion import PolicyConfig, TrainedPolicy
from .mlp import MLP
from .normalize import Normalizer

ID_LENGTH = 12


def _canonical_bytes(policy: TrainedPolicy) -> bytes:
    buf = io.BytesIO()
    buf.write(json.dumps(policy.config.to_document(), sort_keys=True,
                         separators=(",", ":")).encode())
    for name, arr in _named_arrays(policy):
        buf.write(name.encode())
        buf.write(str(arr.shape).encode())
        buf.write(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
    return buf.getvalue()


def _named_arrays(policy: TrainedPolicy):
    yield "obs_lo", policy.obs_norm.lo
    yield "obs_hi", policy.obs_norm.hi
    yield "act_lo", policy.act_norm.lo
    yield "act_hi", policy.act_norm.hi
    yield "loss_curve", policy.loss_curve
    for i, (w, b) in enumerate(zip(policy.net.weights, policy.net.biases)):
        yield f"w{i}", w
        yield f"b{i}", b


def policy_fingerprint(policy: TrainedPolicy) -> str:
    return hashlib.sha256(_canonical_bytes(policy)).hexdigest()[:ID_LENGTH]


def save_policy(root: str, policy: TrainedPolicy) -> str:
    """Writes the policy and returns its content-derived id."""
    policy_id = policy_fingerprint(policy)
    os.makedirs(root, exist_ok=True)
    arrays = {name: np.ascontiguousarray(arr, dtype=np.float64)
              for name, arr in _named_arrays(policy)}
    arrays["config_json"] = np.array(
        json.dumps(policy.config.to_document(), sort_keys=True))
    np.savez(os.path.join(root, f"{policy_id}.npz"), **arrays)
    return policy_id


def load_policy(root: str, policy_id: str) -> TrainedPolicy:
    path = os.path.join(root, f"{policy_id}.npz")
    if not os.path.exists(path):
        raise PolicyMissing(f"no stored policy {policy_id!r} under {root}")
    with np.load(path, allow_pickle=False) as data:
        try:
            config = PolicyConfig.from_document(
                json.loads(str(data["config_json"])))
            obs_norm = Normalizer(lo=data["obs_lo"], hi=data["obs_hi"])
            act_norm = Normalizer(lo=data["act_lo"], hi=data["act_hi"])
            loss_curve = data["loss_curve"]
            rng = np.random.default_rng(0)
            net = MLP([config.input_dim, *config.hidden, config.chunk_dim],
                      rng)
            params = []
            for i in range(net.n_layers):
                params.append(data[f"w{i}"])
                params.append(data[f"b{i}"])
        except KeyError as exc:
            raise FormatError(f"policy file missing field {exc}") from exc
    net.set_parameters(params)
    return TrainedPolicy(config=config, obs_norm=obs_norm, act_norm=act_norm,
                         net=net, loss_curve=loss_curve)


def list_policies(root: str) -> list[str]:
    if not os.path.isdir(root):
        return []
    return sorted(p[:-4] for p in os.listdir(root) if p.endswith(".npz"))
