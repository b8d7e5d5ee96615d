"""Benchmark harness tests: case enumeration, scoring, report
serialization, offline replay, and the combined score."""

import dataclasses
import json

import numpy as np
import pytest

from skilldesk.backends import MockBackend, scene_truth_image
from skilldesk.errors import FormatError, OutOfRange
from skilldesk.eval import (BenchReport, REQUEST_BANK, combined_score,
                            enumerate_match_cases, food_scene_corpus,
                            library_subsets, load_report,
                            replay_match_report, replay_precond_report,
                            run_match_benchmark, run_pipeline_benchmark,
                            run_policy_benchmark, run_precond_benchmark,
                            save_report, scene_for_permutation)
from skilldesk.library import default_library
from skilldesk.policy import MLP, Normalizer, PolicyConfig, TrainedPolicy
from skilldesk.selector import Matched, NewSkill
from skilldesk.sim.food import preconditions_truth
from skilldesk.sim.world import observation_dim
from skilldesk.transcripts import Transcript


# ---- case enumeration ----

def test_library_subsets_enumerates_all_masks():
    subsets = library_subsets()
    assert len(subsets) == 16
    lib = default_library()
    for mask, subset in subsets:
        expected = [s.name for i, s in enumerate(lib.skills)
                    if mask & (1 << i)]
        assert subset.names() == expected
    assert subsets[0][1].names() == []
    assert subsets[15][1].names() == lib.names()


def test_enumerate_match_cases_full_grid():
    cases = enumerate_match_cases(repeats=5)
    assert len(cases) == 16 * 8 * 5 == 640
    ids = [c["case"] for c in cases]
    assert len(set(ids)) == 640
    for case in cases:
        in_subset = case["requested_skill"] in case["subset"].names()
        assert case["expected"] == (Matched(case["requested_skill"])
                                    if in_subset else NewSkill())


def test_request_bank_has_two_phrasings_per_skill():
    per_skill = {}
    for skill, request in REQUEST_BANK:
        per_skill.setdefault(skill, []).append(request)
    assert set(per_skill) == set(default_library().names())
    assert all(len(v) == 2 for v in per_skill.values())


# ---- matching benchmark ----

def test_match_benchmark_perfect_backend_scores_100():
    report = run_match_benchmark(MockBackend(), repeats=1, now="t0")
    assert report.summary == {"cases": 128, "correct": 128, "accuracy": 1.0}
    assert all(r["correct"] for r in report.records)
    assert report.annotations["reference"]["gpt-4"] == 0.963


def test_match_benchmark_accuracy_tracks_injection_exactly():
    backend = MockBackend(match_error_rate=0.3, seed=7)
    report = run_match_benchmark(backend, repeats=1)
    assert backend.injected_match_errors > 0
    assert report.summary["correct"] == 128 - backend.injected_match_errors
    for rec in report.records:
        assert rec["correct"] == (rec["parsed"] == rec["expected"])


def test_match_benchmark_records_carry_raw_responses():
    report = run_match_benchmark(MockBackend(), repeats=1)
    rec = report.by_case()["match-1111-q0-r0"]
    assert rec["request"] == "Serve the rice please."
    assert rec["response"].endswith("SERVE RICE")
    assert rec["subset"] == default_library().names()


def test_match_benchmark_writes_transcript():
    transcript = Transcript(clock=lambda: 0.0)
    run_match_benchmark(MockBackend(), repeats=1, transcript=transcript)
    assert len(transcript.of_kind("match")) == 128
    entry = transcript.entries[0]
    assert {"case", "backend", "prompt", "response", "outcome"} <= set(entry)


# ---- report container ----

def test_report_round_trip(tmp_path):
    report = run_match_benchmark(MockBackend(), repeats=1, now="2026-01-01")
    path = tmp_path / "out" / "match.json"
    save_report(report, path)
    loaded = load_report(path)
    assert loaded == report
    assert json.loads(path.read_text())["format"] == "skilldesk-bench"


def test_report_rejects_garbage(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(FormatError):
        load_report(p)
    p.write_text('{"format": "other"}')
    with pytest.raises(FormatError):
        load_report(p)
    p.write_text('{"format": "skilldesk-bench", "schema_version": 99}')
    with pytest.raises(FormatError):
        load_report(p)


def test_report_by_case_rejects_duplicates():
    report = BenchReport(name="x", created="t", config={},
                         records=[{"case": "a"}, {"case": "a"}], summary={})
    with pytest.raises(FormatError):
        report.by_case()


# ---- replay ----

def test_replay_reproduces_scores_without_backend(tmp_path):
    report = run_match_benchmark(MockBackend(match_error_rate=0.2, seed=3),
                                 repeats=1)
    path = tmp_path / "r.json"
    save_report(report, path)
    replayed = replay_match_report(load_report(path))
    assert replayed.summary == report.summary
    assert [r["correct"] for r in replayed.records] == \
        [r["correct"] for r in report.records]


def test_replay_rescored_after_tampering():
    report = run_match_benchmark(MockBackend(), repeats=1)
    broken = dataclasses.replace(
        report,
        records=[{**r, "parsed": {"kind": "new_skill"}, "correct": False}
                 for r in report.records],
        summary={"cases": 128, "correct": 0, "accuracy": 0.0})
    fixed = replay_match_report(broken)
    assert fixed.summary["accuracy"] == 1.0


def test_replay_precondition_report():
    report = run_precond_benchmark(
        MockBackend(precondition_error_rate=0.4, seed=5))
    replayed = replay_precond_report(report)
    assert replayed.summary["accuracy"] == report.summary["accuracy"]


# ---- precondition benchmark ----

@pytest.mark.parametrize("bits", range(16))
def test_scene_permutation_truth_matches_bits(bits):
    scene = scene_for_permutation(beer=bool(bits & 1), rice=bool(bits & 2),
                                  sausage=bool(bits & 4), lid=bool(bits & 8),
                                  seed=bits)
    truth = preconditions_truth(scene)
    assert truth["OPEN BEER"] == bool(bits & 1)
    assert truth["SERVE RICE"] == bool(bits & 2)
    assert truth["SERVE SAUSAGE"] == bool(bits & 4)
    assert truth["REMOVE LID"] == bool(bits & 8)


def test_food_scene_corpus_covers_all_permutations():
    scenes = food_scene_corpus()
    assert len(scenes) == 16
    seen = {tuple(sorted(preconditions_truth(s).items())) for s in scenes}
    assert len(seen) == 16


def test_food_scene_corpus_paper_scale():
    scenes = food_scene_corpus(count=110)
    assert len(scenes) == 110
    seen = {}
    for s in scenes:
        key = tuple(sorted(preconditions_truth(s).items()))
        seen[key] = seen.get(key, 0) + 1
    assert len(seen) == 16
    assert min(seen.values()) >= 6


def test_precond_benchmark_perfect_backend_scores_100():
    report = run_precond_benchmark(MockBackend(), now="t0")
    assert report.summary["cases"] == 64
    assert report.summary["accuracy"] == 1.0
    assert report.summary["scenes"] == 16


def test_precond_benchmark_accuracy_tracks_injection_exactly():
    backend = MockBackend(precondition_error_rate=0.5, seed=2)
    report = run_precond_benchmark(backend)
    assert backend.injected_precondition_errors > 0
    assert report.summary["correct"] == \
        64 - backend.injected_precondition_errors


def test_precond_benchmark_paper_scale_is_440_checks():
    report = run_precond_benchmark(MockBackend(),
                                   scenes=food_scene_corpus(count=110))
    assert report.summary["cases"] == 440
    assert report.summary["accuracy"] == 1.0


def test_precond_benchmark_custom_views():
    calls = []

    def two_views(state):
        img = scene_truth_image(state)
        calls.append(1)
        return [img, img]

    report = run_precond_benchmark(MockBackend(),
                                   scenes=food_scene_corpus()[:2],
                                   image_fn=two_views)
    assert report.summary["accuracy"] == 1.0
    assert len(calls) == 2


# ---- combined score ----

def test_combined_score_is_product():
    assert combined_score(0.963, 0.775) == pytest.approx(0.746325)
    assert round(combined_score(0.963, 0.775), 3) == 0.746
    assert combined_score(1.0, 1.0) == 1.0
    assert combined_score(0.0, 0.9) == 0.0


def test_combined_score_rejects_out_of_range():
    with pytest.raises(OutOfRange):
        combined_score(1.2, 0.5)
    with pytest.raises(OutOfRange):
        combined_score(0.5, -0.1)
    with pytest.raises(OutOfRange):
        combined_score("high", 0.5)


# ---- pipeline benchmark ----

def test_pipeline_benchmark_vision_calls_equal_matches():
    backend = MockBackend()
    report = run_pipeline_benchmark(backend, backend, repeats=1)
    assert report.summary["cases"] == 128
    # each of the 8 requests matches in the 8 subsets containing its skill
    assert report.summary["matched"] == 64
    assert report.summary["teach_request"] == 64
    assert backend.vision_calls == report.summary["matched"]
    assert backend.text_calls == report.summary["cases"]


def test_pipeline_benchmark_feasible_scene_executes_all_matches():
    backend = MockBackend()
    report = run_pipeline_benchmark(backend, backend, repeats=1)
    assert report.summary["executed"] == 64
    assert report.summary.get("blocked", 0) == 0


def test_pipeline_benchmark_infeasible_scene_blocks():
    from skilldesk.sim.food import make_food_scene
    backend = MockBackend()
    scene = make_food_scene(capped=False, rice=False, sausages=0,
                            pan_cover="on_table", seed=1)
    report = run_pipeline_benchmark(backend, backend, repeats=1, scene=scene)
    assert report.summary["blocked"] == 64
    assert report.summary["executed"] == 0
    assert backend.vision_calls == report.summary["matched"]


# ---- policy rollout benchmark ----

def _stub_policy(task):
    obs_dim = observation_dim(task)
    cfg = PolicyConfig(obs_dim=obs_dim, action_dim=4, hidden=(16, 16),
                       epochs=1)
    net = MLP([cfg.input_dim, *cfg.hidden, cfg.chunk_dim],
              np.random.default_rng(0))
    ones = np.ones(obs_dim)
    return TrainedPolicy(config=cfg, obs_norm=Normalizer(lo=-ones, hi=ones),
                         act_norm=Normalizer(lo=-np.ones(4), hi=np.ones(4)),
                         net=net, loss_curve=np.zeros(1))


def test_policy_benchmark_records_and_summary():
    report = run_policy_benchmark(_stub_policy("crate_pushing"),
                                  "crate_pushing", trials=2, seed0=50)
    assert report.summary["trials"] == 2
    assert 0.0 <= report.summary["success_rate"] <= 1.0
    assert "mean_final_iou" in report.summary
    for rec in report.records:
        assert isinstance(rec["final_iou"], float)
        assert rec["seed"] in (50, 51)


def test_policy_benchmark_no_iou_for_other_tasks():
    report = run_policy_benchmark(_stub_policy("pick_place"), "pick_place",
                                  trials=1)
    assert report.records[0]["final_iou"] is None
    assert "mean_final_iou" not in report.summary


def test_policy_benchmark_is_seed_deterministic():
    a = run_policy_benchmark(_stub_policy("pick_place"), "pick_place",
                             trials=2, seed0=7, now="t")
    b = run_policy_benchmark(_stub_policy("pick_place"), "pick_place",
                             trials=2, seed0=7, now="t")
    assert a == b
