"""Acceptance suite: one test per release criterion.

Each test exercises a whole subsystem end to end at its stated
tolerance and prints a single [PASS] line with the measured numbers
(visible with -s or in captured output). A failing criterion fails its
test; nothing here is mocked beyond the offline language/vision
backend, which is the point.
"""

import dataclasses
import math
import random
import time
from pathlib import Path

import numpy as np
import pytest

from skilldesk.backends import MockBackend
from skilldesk.demos import generate_dataset, record_demonstration
from skilldesk.eval import (FEASIBILITY_ORDER, combined_score,
                            food_scene_corpus, run_match_benchmark,
                            run_pipeline_benchmark, run_policy_benchmark,
                            run_precond_benchmark)
from skilldesk.library import default_skills
from skilldesk.orchestrator import Orchestrator, scenario_run
from skilldesk.policy import (MLP, Normalizer, PolicyConfig, TrainedPolicy,
                              forward_corrupt, run_receding_horizon,
                              sample_chunk, train_policy)
from skilldesk.recorder import (RecordingSession, dataset_stats,
                                episode_arrays, load_dataset, load_episode,
                                save_episode)
from skilldesk.selector import (parse_match_response,
                                parse_precondition_response)
from skilldesk.sim.food import preconditions_truth
from skilldesk.sim.geometry import iou, rect_corners
from skilldesk.sim.world import observation_dim

FIXTURES = Path(__file__).parent / "fixtures"


def _report(label: str, detail: str):
    print(f"[PASS] {label}: {detail}")


# ---- 1. selector closure over the full benchmark grid ----

def test_selector_closure_full_grid_and_feasibility():
    t0 = time.perf_counter()
    match = run_match_benchmark(MockBackend())
    assert len(match.records) == 640
    assert match.summary["cases"] == 640
    assert match.summary["accuracy"] == 1.0

    scenes = food_scene_corpus()
    covered = {tuple(preconditions_truth(s)[name]
                     for name in FEASIBILITY_ORDER) for s in scenes}
    assert len(covered) == 16, "not every feasibility permutation present"
    precond = run_precond_benchmark(MockBackend(), scenes=scenes)
    assert precond.summary["accuracy"] == 1.0
    assert precond.summary["cases"] == 64
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0
    _report("selector closure",
            f"640 match + 64 feasibility cases all correct in {elapsed:.2f}s")


# ---- 2. parser robustness: corpus plus fuzz ----

def test_parser_survives_corpus_and_fuzz():
    import json
    corpus = json.loads((FIXTURES / "parser_corpus.json").read_text())
    default_names = corpus["default_names"]
    match_cases = [c for c in corpus["cases"] if c["kind"] == "match"]
    assert len(match_cases) >= 30
    for case in corpus["cases"]:
        if case["kind"] == "match":
            names = case.get("names", default_names)
            outcome = parse_match_response(case["response"], names)
        else:
            outcome = parse_precondition_response(case["response"])
        got = type(outcome).__name__
        expected = {"matched": "Matched", "new_skill": "NewSkill",
                    "met": "Met", "not_met": "NotMet",
                    "parse_failure": "ParseFailure"}[case["expect"]["kind"]]
        assert got == expected, f"case {case['id']}: {got} != {expected}"

    names = [s.name for s in default_skills()]
    rng = random.Random(20260817)
    aborts = 0
    n_fuzz = 100_000
    for _ in range(n_fuzz):
        text = rng.randbytes(rng.randrange(0, 200)).decode(
            "utf-8", errors="replace")
        try:
            parse_match_response(text, names)
            parse_precondition_response(text)
        except Exception:  # noqa: BLE001 - counting aborts is the test
            aborts += 1
    assert aborts == 0
    _report("parser robustness",
            f"{len(corpus['cases'])} fixtures exact,"
            f" {n_fuzz} fuzz strings with zero aborts")


# ---- 3. vision economy: calls equal first-stage matches ----

def test_vision_calls_equal_matched_outcomes():
    match_only = MockBackend()
    run_match_benchmark(match_only)
    assert match_only.vision_calls == 0

    checks = []
    for rate, seed in ((0.0, 0), (0.3, 5)):
        backend = MockBackend(match_error_rate=rate, seed=seed)
        report = run_pipeline_benchmark(backend, backend)
        matched = report.summary["matched"]
        assert backend.vision_calls == matched
        assert backend.text_calls == report.summary["cases"]
        checks.append(f"{backend.vision_calls}=={matched} @rate {rate}")
    _report("vision-call economy", "; ".join(checks))


# ---- 4. overlap ratio against a rasterization oracle ----

def _rect_mask(px, py, rect):
    cx, cy, w, h, theta = rect
    c, s = math.cos(theta), math.sin(theta)
    dx = px - cx
    dy = py - cy
    local_x = c * dx + s * dy
    local_y = -s * dx + c * dy
    return (np.abs(local_x) <= w / 2) & (np.abs(local_y) <= h / 2)


def test_overlap_ratio_matches_rasterization_oracle():
    n = 2000
    unit = (np.arange(n, dtype=np.float32) + 0.5) / n
    gx, gy = np.meshgrid(unit, unit)

    def oracle(ra, rb):
        corners = np.vstack([rect_corners(*ra), rect_corners(*rb)])
        lo = corners.min(axis=0)
        hi = corners.max(axis=0)
        px = lo[0] + gx * (hi[0] - lo[0])
        py = lo[1] + gy * (hi[1] - lo[1])
        in_a = _rect_mask(px, py, ra)
        in_b = _rect_mask(px, py, rb)
        union = np.count_nonzero(in_a | in_b)
        return np.count_nonzero(in_a & in_b) / union if union else 0.0

    rng = np.random.default_rng(42)

    def rand_rect():
        return (float(rng.uniform(-1, 1)), float(rng.uniform(-1, 1)),
                float(rng.uniform(0.1, 1.2)), float(rng.uniform(0.1, 1.2)),
                float(rng.uniform(-math.pi, math.pi)))

    worst = 0.0
    pairs = [(rand_rect(), rand_rect()) for _ in range(1000)]
    for ra, rb in pairs:
        worst = max(worst, abs(iou(ra, rb) - oracle(ra, rb)))
    assert worst < 5e-3

    # symmetry and scale invariance, checked analytically
    scale = 3.7
    for ra, rb in pairs:
        assert abs(iou(ra, rb) - iou(rb, ra)) < 1e-9
        sa = (ra[0] * scale, ra[1] * scale, ra[2] * scale, ra[3] * scale,
              ra[4])
        sb = (rb[0] * scale, rb[1] * scale, rb[2] * scale, rb[3] * scale,
              rb[4])
        assert abs(iou(ra, rb) - iou(sa, sb)) < 1e-9
    _report("overlap ratio",
            f"1000 pairs, worst oracle gap {worst:.2e},"
            " symmetry/scale within 1e-9")


# ---- 5. denoiser numerics and reproducibility ----

def test_denoiser_numerics_and_reproducibility(tmp_path):
    # gradient check: two hidden layers, every parameter, central
    # differences at 1e-6 against the handwritten backward pass
    rng = np.random.default_rng(7)
    net = MLP([4, 8, 8, 3], rng)
    x = rng.standard_normal((5, 4))
    target = rng.standard_normal((5, 3))

    def loss():
        return float(np.mean((net(x) - target) ** 2))

    out, cache = net.forward(x)
    diff = out - target
    grad_w, grad_b, _ = net.backward(cache, (2.0 / diff.size) * diff)
    analytic = []
    for gw, gb in zip(grad_w, grad_b):
        analytic.append(gw)
        analytic.append(gb)
    eps = 1e-6
    worst_rel = 0.0
    for param, grads in zip(net.parameters(), analytic):
        flat_p = param.ravel()
        flat_g = grads.ravel()
        for i in range(flat_p.size):
            keep = flat_p[i]
            flat_p[i] = keep + eps
            up = loss()
            flat_p[i] = keep - eps
            down = loss()
            flat_p[i] = keep
            fd = (up - down) / (2 * eps)
            rel = abs(fd - flat_g[i]) / max(1e-8, abs(fd) + abs(flat_g[i]))
            worst_rel = max(worst_rel, rel)
    assert worst_rel < 1e-4

    # corruption with a signal coefficient of exactly 1 is the identity
    x0 = rng.standard_normal((6, 8))
    noise = rng.standard_normal((6, 8))
    assert np.array_equal(forward_corrupt(x0, noise, 1.0), x0)

    # bitwise reproducibility of training and sampling under one seed
    episodes = [record_demonstration("pick_place", s, noise_scale=0.05)
                for s in range(2)]
    obs, actions = episode_arrays(episodes[0])
    config = PolicyConfig(obs_dim=obs.shape[1], action_dim=actions.shape[1],
                          hidden=(32, 32), epochs=2, batch_size=64, seed=3)
    first = train_policy(episodes, config)
    second = train_policy(episodes, config)
    assert all(np.array_equal(a, b) for a, b in
               zip(first.net.parameters(), second.net.parameters()))
    assert np.array_equal(first.loss_curve, second.loss_curve)
    snapshot = np.stack([obs[0]] * config.obs_horizon)
    chunk_a = sample_chunk(first, snapshot, np.random.default_rng(11))
    chunk_b = sample_chunk(second, snapshot, np.random.default_rng(11))
    assert np.array_equal(chunk_a, chunk_b)
    _report("denoiser numerics",
            f"worst gradient rel err {worst_rel:.2e}; corruption identity"
            " exact; train+sample bitwise stable")


# ---- 6. cloned policies reach reference success rates ----

def test_cloned_policies_reach_reference_success(tmp_path):
    t0 = time.perf_counter()
    lines = []

    def build(task, epochs, root):
        generate_dataset(task, 100, root, noise_scale=0.1, seed0=0)
        episodes = load_dataset(root, task)
        assert len(episodes) == 100
        obs, actions = episode_arrays(episodes[0])
        config = PolicyConfig(obs_dim=obs.shape[1],
                              action_dim=actions.shape[1],
                              epochs=epochs, seed=0)
        return episodes, config

    episodes, config = build("pick_place", 600, str(tmp_path / "pp"))
    policy = train_policy(episodes, config)
    report = run_policy_benchmark(policy, "pick_place", trials=100,
                                  seed0=1000)
    rate = report.summary["success_rate"]
    assert rate >= 0.80, f"pick_place success {rate}"
    lines.append(f"pick_place {rate:.2f}>=0.80")

    episodes, config = build("cap_removal", 600, str(tmp_path / "cap"))
    policy = train_policy(episodes, config)
    report = run_policy_benchmark(policy, "cap_removal", trials=100,
                                  seed0=1000)
    rate = report.summary["success_rate"]
    assert rate >= 0.70, f"cap_removal success {rate}"
    lines.append(f"cap_removal {rate:.2f}>=0.70")

    episodes, config = build("crate_pushing", 1200, str(tmp_path / "crate"))
    policy = train_policy(episodes, config)
    report = run_policy_benchmark(policy, "crate_pushing", trials=100,
                                  seed0=1000)
    untrained = train_policy(episodes,
                             dataclasses.replace(config, epochs=0))
    baseline = run_policy_benchmark(untrained, "crate_pushing", trials=100,
                                    seed0=1000)
    trained_iou = report.summary["mean_final_iou"]
    baseline_iou = baseline.summary["mean_final_iou"]
    assert trained_iou >= baseline_iou + 0.3, (
        f"crate_pushing IoU {trained_iou} vs baseline {baseline_iou}")
    lines.append(f"crate IoU {trained_iou:.3f} vs baseline"
                 f" {baseline_iou:.3f} (+0.3 required)")

    elapsed = time.perf_counter() - t0
    assert elapsed < 7200, f"took {elapsed:.0f}s, budget is 2 h"
    lines.append(f"{elapsed:.0f}s total")
    _report("cloning efficacy", "; ".join(lines))


# ---- 7. receding-horizon scheduling contract ----

def _stub_policy(obs_dim=1, action_dim=4, seed=0):
    cfg = PolicyConfig(obs_dim=obs_dim, action_dim=action_dim,
                       hidden=(16, 16), epochs=1)
    rng = np.random.default_rng(seed)
    net = MLP([cfg.input_dim, *cfg.hidden, cfg.chunk_dim], rng)
    ones = np.ones(obs_dim)
    return TrainedPolicy(
        config=cfg,
        obs_norm=Normalizer(lo=-ones, hi=ones),
        act_norm=Normalizer(lo=-np.ones(action_dim), hi=np.ones(action_dim)),
        net=net,
        loss_curve=np.zeros(1))


def _assert_in_order(result):
    sources = [t.source for t in result.ticks if isinstance(t.source, int)]
    assert sources == sorted(sources), "chunk switches went backwards"
    by_chunk: dict = {}
    for t in result.ticks:
        if isinstance(t.source, int):
            by_chunk.setdefault(t.source, []).append(np.array(t.action))
    for record in result.chunks:
        played = by_chunk.get(record.index, [])
        for i, action in enumerate(played):
            assert np.array_equal(action, record.actions[i]), (
                f"chunk {record.index} played out of order at row {i}")


def test_chunk_scheduling_contract():
    policy = _stub_policy()
    step_fn = lambda s, a: s + 1
    obs_fn = lambda s: np.array([float(s)])

    for max_ticks in (1, 7, 8, 9, 16, 57):
        result = run_receding_horizon(policy, 0, step_fn, obs_fn,
                                      max_ticks=max_ticks,
                                      rng=np.random.default_rng(1))
        assert result.sampled_count == math.ceil(max_ticks / 8), max_ticks
        assert result.hold_count == 0
        _assert_in_order(result)

    for latency in (1, 4, 7):
        result = run_receding_horizon(policy, 0, step_fn, obs_fn,
                                      max_ticks=57, latency_ticks=latency,
                                      rng=np.random.default_rng(1))
        assert result.hold_count == 0, f"latency {latency} caused holds"
        _assert_in_order(result)

    hold_counts = {}
    for latency in (8, 11):
        result = run_receding_horizon(policy, 0, step_fn, obs_fn,
                                      max_ticks=57, latency_ticks=latency,
                                      rng=np.random.default_rng(1))
        assert result.hold_count > 0, f"latency {latency} produced no holds"
        _assert_in_order(result)
        hold_counts[latency] = result.hold_count
    _report("chunk scheduling",
            "ceil(T/8) chunks for T in {1,7,8,9,16,57}; zero holds below"
            f" 8 ticks; holds at 8/11 ticks: {hold_counts}")


# ---- 8. recorder cadence, round trip, and dataset stats ----

# published means the fixtures must reproduce exactly
REFERENCE_MEAN_SHORT = 17.1
REFERENCE_MEAN_LONG = 19.5


def _episode_with_duration(seconds, index):
    session = RecordingSession(skill="FIXTURE", dt_nominal=0.1,
                               episode_id=f"fix-{index:03d}",
                               now=lambda: "2026-08-17T00:00:00Z")
    count = int(round(seconds / 0.1)) + 1
    for i in range(count):
        session.add(t=round(i * 0.1, 9), x=0.1, y=0.2, theta=0.0,
                    action=(0.0, 0.0, 0.0, 0.0))
    return session.finish()


def test_recorder_cadence_and_stats(tmp_path):
    session = RecordingSession(skill="REMOVE LID", dt_nominal=0.1,
                               episode_id="accept-0001",
                               now=lambda: "2026-08-17T00:00:00Z")
    for i in range(100):
        session.add(t=round(i * 0.1, 9), x=0.1 + i * 1e-3, y=0.2,
                    theta=0.01 * i, action=(1e-2, 0.0, 0.1, 0.0),
                    extras={"obs": [float(i)]})
    episode = session.finish()  # raises TimingViolation on any cadence slip
    assert len(episode.frames) == 100

    path = save_episode(str(tmp_path), episode)
    assert load_episode(path) == episode

    short = dataset_stats([_episode_with_duration(d, i) for i, d in
                           enumerate((15.3, 17.1, 18.9))])
    long = dataset_stats([_episode_with_duration(d, i) for i, d in
                          enumerate((18.0, 19.5, 21.0))])
    assert abs(short.mean_duration - REFERENCE_MEAN_SHORT) < 1e-9
    assert abs(long.mean_duration - REFERENCE_MEAN_LONG) < 1e-9
    _report("recorder contract",
            "100 frames at 10 Hz with zero timing violations; lossless"
            f" round trip; means {short.mean_duration:.1f}/"
            f"{long.mean_duration:.1f} within 1e-9")


# ---- 9. end-to-end walkthrough and the combined score ----

EXPECTED_SEQUENCE = ["executed", "teach_requested", "executed", "executed",
                     "blocked", "executed"]


def test_walkthrough_sequence_and_combined_score(tmp_path):
    runs = []
    for i in range(2):
        counter = iter(range(10 ** 9))
        orch = Orchestrator(data_root=str(tmp_path / f"run{i}"),
                            clock=lambda: float(next(counter)))
        results = scenario_run(orch, seed=0)
        assert [r.kind for r in results] == EXPECTED_SEQUENCE
        runs.append([(r.kind, r.skill, r.ticks, r.success)
                     for r in results])
    assert runs[0] == runs[1], "walkthrough is not deterministic"

    product = combined_score(0.963, 0.775)
    assert product == 0.963 * 0.775
    assert round(product, 3) == 0.746
    _report("end-to-end walkthrough",
            f"sequence {EXPECTED_SEQUENCE} twice identically;"
            f" combined score {product:.6f} rounds to 0.746")
