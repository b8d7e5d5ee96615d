import math

import numpy as np
import pytest

from skilldesk.errors import (
    DimMismatch,
    DivergedLoss,
    EmptyDataset,
    PolicyMissing,
    ShapeMismatch,
)
from skilldesk.policy import (
    MLP,
    Adam,
    Normalizer,
    PolicyConfig,
    beta_schedule,
    build_training_arrays,
    cosine_alpha_bar,
    episode_windows,
    forward_corrupt,
    list_policies,
    load_policy,
    policy_fingerprint,
    sample_chunk,
    save_policy,
    sinusoidal_embedding,
    train_policy,
)
from skilldesk.recorder import RecordingSession

FIXED_NOW = lambda: "2026-01-05T10:00:00+00:00"


def _toy_episodes(n_eps=4, n_frames=40, obs_fn=None, act_fn=None):
    obs_fn = obs_fn or (lambda e, k: [math.sin(0.1 * k + e),
                                      math.cos(0.07 * k), 0.01 * k])
    act_fn = act_fn or (lambda e, k: [0.1 * math.sin(0.2 * k), -0.05,
                                      0.02 * k % 0.3, float(k % 2)])
    episodes = []
    for e in range(n_eps):
        s = RecordingSession("toy", episode_id=f"toy{e}", now=FIXED_NOW)
        for k in range(n_frames):
            s.add(t=k * 0.1, x=0.1, y=0.1, theta=0.0, action=act_fn(e, k),
                  extras={"obs": obs_fn(e, k)})
        episodes.append(s.finish())
    return episodes


def _small_config(**kw):
    kw.setdefault("obs_dim", 3)
    kw.setdefault("action_dim", 4)
    kw.setdefault("hidden", (32, 32))
    kw.setdefault("epochs", 5)
    kw.setdefault("batch_size", 64)
    kw.setdefault("seed", 7)
    return PolicyConfig(**kw)


# ---- normalization ----

def test_normalizer_maps_extremes_to_unit_box():
    data = np.array([[0.0, -2.0], [4.0, 6.0]])
    nm = Normalizer.fit(data)
    z = nm.normalize(data)
    assert np.allclose(z, [[-1, -1], [1, 1]])


def test_normalizer_round_trip():
    rng = np.random.default_rng(0)
    data = rng.uniform(-3, 5, (50, 6))
    nm = Normalizer.fit(data)
    assert np.allclose(nm.denormalize(nm.normalize(data)), data, atol=1e-12)


def test_normalizer_degenerate_dimension():
    data = np.array([[1.0, 5.0], [2.0, 5.0]])
    nm = Normalizer.fit(data)
    z = nm.normalize(np.array([[1.5, 123.0]]))
    assert z[0, 1] == 0.0
    back = nm.denormalize(np.array([[0.3, 0.9]]))
    assert back[0, 1] == 5.0


def test_normalizer_dim_mismatch():
    nm = Normalizer.fit(np.zeros((3, 2)) + [[1], [2], [3]])
    with pytest.raises(DimMismatch):
        nm.normalize(np.zeros((4, 5)))


def test_normalizer_document_round_trip():
    nm = Normalizer.fit(np.array([[0.0, 1.0], [2.0, 3.0]]))
    again = Normalizer.from_document(nm.to_document())
    assert np.array_equal(again.lo, nm.lo)
    assert np.array_equal(again.hi, nm.hi)


# ---- windows ----

def test_window_count_equals_frame_count():
    obs = np.arange(12.0).reshape(6, 2)
    act = np.arange(18.0).reshape(6, 3)
    ow, aw = episode_windows(obs, act, obs_horizon=2, pred_horizon=4)
    assert ow.shape == (6, 2, 2)
    assert aw.shape == (6, 4, 3)


def test_window_edges_replicate():
    obs = np.arange(10.0).reshape(5, 2)
    act = np.arange(15.0).reshape(5, 3)
    ow, aw = episode_windows(obs, act, obs_horizon=2, pred_horizon=4)
    # first window looks back onto a copy of frame 0
    assert np.array_equal(ow[0], np.stack([obs[0], obs[0]]))
    assert np.array_equal(ow[3], np.stack([obs[2], obs[3]]))
    # last window runs off the end onto copies of the final action
    assert np.array_equal(aw[4], np.stack([act[4]] * 4))
    assert np.array_equal(aw[3], np.stack([act[3], act[4], act[4], act[4]]))
    assert np.array_equal(aw[1], act[1:5])


def test_build_training_arrays_stacks_episodes():
    eps = _toy_episodes(n_eps=3, n_frames=20)
    ow, aw = build_training_arrays(eps, obs_horizon=2, pred_horizon=14)
    assert ow.shape == (60, 2, 3)
    assert aw.shape == (60, 14, 4)


def test_build_training_arrays_empty():
    with pytest.raises(EmptyDataset):
        build_training_arrays([], 2, 14)


# ---- the network and optimizer ----

def test_mlp_forward_shape_and_shape_errors():
    net = MLP([5, 16, 3], np.random.default_rng(0))
    out = net(np.zeros((7, 5)))
    assert out.shape == (7, 3)
    with pytest.raises(ShapeMismatch):
        net(np.zeros((7, 4)))
    with pytest.raises(ShapeMismatch):
        MLP([4], np.random.default_rng(0))


def test_manual_backprop_matches_central_differences():
    # two hidden layers, smooth activations, random linear readout loss
    rng = np.random.default_rng(3)
    net = MLP([5, 8, 7, 3], rng)
    x = rng.standard_normal((4, 5))
    proj = rng.standard_normal((4, 3))

    def loss() -> float:
        return float(np.sum(net(x) * proj))

    out, cache = net.forward(x)
    grad_w, grad_b, grad_x = net.backward(cache, proj)

    eps = 1e-6

    def numeric(arr):
        g = np.zeros_like(arr)
        flat = arr.ravel()
        gf = g.ravel()
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + eps
            hi = loss()
            flat[i] = keep - eps
            lo = loss()
            flat[i] = keep
            gf[i] = (hi - lo) / (2 * eps)
        return g

    worst = 0.0
    for analytic, arr in (list(zip(grad_w, net.weights))
                          + list(zip(grad_b, net.biases)) + [(grad_x, x)]):
        num = numeric(arr)
        denom = np.maximum(np.abs(analytic) + np.abs(num), 1e-8)
        worst = max(worst, float(np.max(np.abs(analytic - num) / denom)))
    assert worst < 1e-7


def test_adam_zero_lr_is_identity():
    rng = np.random.default_rng(0)
    net = MLP([3, 8, 2], rng)
    before = [p.copy() for p in net.parameters()]
    opt = Adam(net.parameters(), lr=0.0)
    grads = [np.ones_like(p) for p in net.parameters()]
    for _ in range(5):
        opt.step(net.parameters(), grads)
    for b, p in zip(before, net.parameters()):
        assert np.array_equal(b, p)


def test_adam_solves_least_squares():
    rng = np.random.default_rng(1)
    target = rng.standard_normal((6, 2))
    x = rng.standard_normal((6, 4))
    net = MLP([4, 16, 2], rng)
    opt = Adam(net.parameters(), lr=1e-2)
    first = None
    for _ in range(400):
        out, cache = net.forward(x)
        diff = out - target
        if first is None:
            first = float(np.mean(diff ** 2))
        gw, gb, _ = net.backward(cache, (2.0 / diff.size) * diff)
        grads = [g for pair in zip(gw, gb) for g in pair]
        opt.step(net.parameters(), grads)
    final = float(np.mean((net(x) - target) ** 2))
    assert final < first * 1e-3


# ---- noise schedule ----

def test_alpha_bar_starts_at_exactly_one_and_decreases():
    ab = cosine_alpha_bar(50)
    assert ab[0] == 1.0
    assert np.all(np.diff(ab) < 0)
    assert ab[-1] > 0


def test_beta_schedule_bounds():
    ab, beta = beta_schedule(50)
    assert beta[0] == 0.0
    assert np.all(beta[1:] > 0)
    assert np.all(beta[1:] <= 0.999)
    assert beta[-1] == 0.999  # the cap binds at the last step
    # exact consistency: alpha_bar is the running product of (1 - beta)
    rebuilt = np.cumprod(1.0 - beta[1:])
    assert np.array_equal(rebuilt, ab[1:])


def test_forward_corruption_identity_at_full_signal():
    rng = np.random.default_rng(2)
    x0 = rng.standard_normal((5, 8))
    eps = rng.standard_normal((5, 8))
    assert np.array_equal(forward_corrupt(x0, eps, 1.0), x0)


def test_forward_corruption_pure_noise_at_zero_signal():
    rng = np.random.default_rng(2)
    x0 = rng.standard_normal((5, 8))
    eps = rng.standard_normal((5, 8))
    assert np.array_equal(forward_corrupt(x0, eps, 0.0), eps)


def test_sinusoidal_embedding_shape_and_distinctness():
    emb = sinusoidal_embedding(np.arange(1, 51), 32)
    assert emb.shape == (50, 32)
    assert np.all(np.abs(emb) <= 1.0)
    assert not np.allclose(emb[0], emb[1])


# ---- training ----

def test_config_validation():
    with pytest.raises(DimMismatch):
        PolicyConfig(obs_dim=3, action_dim=4, act_horizon=20, pred_horizon=14)
    with pytest.raises(DimMismatch):
        PolicyConfig(obs_dim=3, action_dim=4, embed_dim=31)


def test_config_document_round_trip():
    cfg = _small_config(epochs=77)
    assert PolicyConfig.from_document(cfg.to_document()) == cfg


def test_training_is_bitwise_deterministic():
    eps = _toy_episodes(n_eps=2, n_frames=25)
    cfg = _small_config(epochs=3)
    a = train_policy(eps, cfg)
    b = train_policy(eps, cfg)
    for pa, pb in zip(a.net.parameters(), b.net.parameters()):
        assert np.array_equal(pa, pb)
    assert np.array_equal(a.loss_curve, b.loss_curve)


def test_zero_learning_rate_freezes_the_curve():
    eps = _toy_episodes(n_eps=2, n_frames=25)
    cfg = _small_config(epochs=4, learning_rate=0.0)
    policy = train_policy(eps, cfg)
    assert len(policy.loss_curve) == 5
    assert np.all(policy.loss_curve == policy.loss_curve[0])


def test_training_reduces_probe_loss():
    eps = _toy_episodes(n_eps=4, n_frames=40,
                        act_fn=lambda e, k: [0.3, -0.1, 0.25, 1.0])
    cfg = _small_config(epochs=150, hidden=(64, 64), learning_rate=3e-3)
    policy = train_policy(eps, cfg)
    # untrained probe sits near 1.0; a fitted denoiser lands well below
    assert policy.loss_curve[-1] < policy.loss_curve[0] / 3
    assert policy.loss_curve[-1] < 0.25


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_diverged_loss_raises_on_overflowing_updates():
    eps = _toy_episodes(n_eps=1, n_frames=20)
    with pytest.raises(DivergedLoss) as err:
        train_policy(eps, _small_config(epochs=2, learning_rate=1e308))
    assert err.value.epoch == 0


def test_non_finite_training_data_rejected():
    def bad_obs(e, k):
        return [float("nan"), 0.0, 0.0]

    eps = _toy_episodes(n_eps=1, n_frames=20, obs_fn=bad_obs)
    with pytest.raises(ValueError):
        train_policy(eps, _small_config(epochs=1))


def test_obs_dim_mismatch_detected():
    eps = _toy_episodes()
    with pytest.raises(DimMismatch):
        train_policy(eps, _small_config(obs_dim=9))


def test_progress_callback_sees_every_epoch():
    eps = _toy_episodes(n_eps=1, n_frames=20)
    seen = []
    train_policy(eps, _small_config(epochs=3),
                 progress=lambda e, l: seen.append(e))
    assert seen == [0, 1, 2]


# ---- sampling ----

def test_sampling_is_bitwise_deterministic():
    eps = _toy_episodes(n_eps=2, n_frames=25)
    policy = train_policy(eps, _small_config(epochs=3))
    obs_hist = np.array([[0.1, 0.2, 0.0], [0.15, 0.18, 0.01]])
    a = sample_chunk(policy, obs_hist, np.random.default_rng(11))
    b = sample_chunk(policy, obs_hist, np.random.default_rng(11))
    assert np.array_equal(a, b)
    c = sample_chunk(policy, obs_hist, np.random.default_rng(12))
    assert not np.array_equal(a, c)


def test_sample_shape_and_obs_check():
    eps = _toy_episodes(n_eps=1, n_frames=20)
    policy = train_policy(eps, _small_config(epochs=1))
    chunk = sample_chunk(policy, np.zeros((2, 3)), np.random.default_rng(0))
    assert chunk.shape == (14, 4)
    with pytest.raises(DimMismatch):
        sample_chunk(policy, np.zeros((3, 3)), np.random.default_rng(0))


def test_constant_actions_reproduced_exactly():
    # constant action dims normalize degenerately, so any sampled chunk
    # must denormalize back onto the constant
    const = [0.12, -0.3, 0.0, 1.0]
    eps = _toy_episodes(n_eps=2, n_frames=20,
                        act_fn=lambda e, k: const)
    policy = train_policy(eps, _small_config(epochs=1))
    chunk = sample_chunk(policy, np.zeros((2, 3)), np.random.default_rng(4))
    assert np.allclose(chunk, np.array([const] * 14), atol=1e-12)


# ---- the store ----

def test_store_round_trip(tmp_path):
    eps = _toy_episodes(n_eps=2, n_frames=25)
    policy = train_policy(eps, _small_config(epochs=2))
    pid = save_policy(str(tmp_path), policy)
    assert len(pid) == 12
    loaded = load_policy(str(tmp_path), pid)
    assert loaded.config == policy.config
    for pa, pb in zip(policy.net.parameters(), loaded.net.parameters()):
        assert np.array_equal(pa, pb)
    assert np.array_equal(loaded.loss_curve, policy.loss_curve)
    x = np.random.default_rng(0).standard_normal((3, policy.config.chunk_dim))
    obs = np.zeros((3, policy.config.obs_horizon * policy.config.obs_dim))
    k = np.array([5, 20, 50])
    assert np.array_equal(policy.predict_noise(k, obs, x),
                          loaded.predict_noise(k, obs, x))


def test_policy_id_is_content_derived(tmp_path):
    eps = _toy_episodes(n_eps=2, n_frames=25)
    cfg = _small_config(epochs=2)
    a = train_policy(eps, cfg)
    b = train_policy(eps, cfg)
    assert policy_fingerprint(a) == policy_fingerprint(b)
    other = train_policy(eps, _small_config(epochs=3))
    assert policy_fingerprint(other) != policy_fingerprint(a)
    pid = save_policy(str(tmp_path), a)
    assert save_policy(str(tmp_path), b) == pid
    assert list_policies(str(tmp_path)) == [pid]


def test_missing_policy(tmp_path):
    with pytest.raises(PolicyMissing):
        load_policy(str(tmp_path), "nope")
    assert list_policies(str(tmp_path / "ghost")) == []
