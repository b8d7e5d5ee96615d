"""Command line entry points.

Every report-producing command writes three kinds of output into its
--out directory: a JSON report, CSV records, and rendered figures, so a
run can be inspected without rerunning anything.
"""

from __future__ import annotations

import json
from pathlib import Path

import click

from .backends import MockBackend
from .config import load_config, build_orchestrator
from .demos import generate_dataset
from .eval import (run_match_benchmark, run_policy_benchmark,
                   run_precond_benchmark, save_report)
from .orchestrator import Orchestrator, scenario_run
from .policy import (PolicyConfig, load_policy, save_policy, train_policy)
from .recorder import dataset_stats, load_dataset
from .transcripts import Transcript
from . import plotting


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ";".join(str(v) for v in value)
    if isinstance(value, dict):
        return json.dumps(value, sort_keys=True)
    return str(value)


def _write_csv(path, rows) -> str:
    import csv
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns: list[str] = []
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in columns])
    return str(path)


def _out_dir(out) -> Path:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


@click.group()
def main():
    """Skill library, selector benchmarks, policy training and serving."""


@main.command("bench-match")
@click.option("--out", required=True, type=click.Path(), help="Report directory.")
@click.option("--repeats", default=5, show_default=True)
@click.option("--error-rate", default=0.0, show_default=True,
              help="Injected match error rate for the offline backend.")
@click.option("--seed", default=0, show_default=True)
def bench_match(out, repeats, error_rate, seed):
    """Skill-matching benchmark over every library subset."""
    backend = MockBackend(match_error_rate=error_rate, seed=seed)
    report = run_match_benchmark(backend, repeats=repeats)
    out = _out_dir(out)
    save_report(report, out / "report.json")
    _write_csv(out / "records.csv", report.records)
    plotting.save_match_accuracy_figure(report, out / "accuracy_by_subset.png")
    s = report.summary
    click.echo(f"match benchmark: {s['correct']}/{s['cases']} correct"
               f" ({s['accuracy']:.4f}), report in {out}")


@main.command("bench-precond")
@click.option("--out", required=True, type=click.Path(), help="Report directory.")
@click.option("--scenes", default=16, show_default=True,
              help="Scene count; every feasibility permutation is covered.")
@click.option("--error-rate", default=0.0, show_default=True,
              help="Injected check error rate for the offline backend.")
@click.option("--seed", default=0, show_default=True)
def bench_precond(out, scenes, error_rate, seed):
    """Visual feasibility-check benchmark over generated scenes."""
    from .eval import food_scene_corpus
    backend = MockBackend(precondition_error_rate=error_rate, seed=seed)
    corpus = food_scene_corpus(count=scenes, seed=seed)
    report = run_precond_benchmark(backend, scenes=corpus)
    out = _out_dir(out)
    save_report(report, out / "report.json")
    _write_csv(out / "records.csv", report.records)
    plotting.save_precond_accuracy_figure(report, out / "accuracy_by_skill.png")
    s = report.summary
    click.echo(f"precondition benchmark: {s['correct']}/{s['cases']} correct"
               f" ({s['accuracy']:.4f}) over {s['scenes']} scenes,"
               f" report in {out}")


@main.command("demo-gen")
@click.option("--task", required=True,
              type=click.Choice(["pick_place", "cap_removal",
                                 "crate_pushing"]))
@click.option("--count", default=100, show_default=True)
@click.option("--root", required=True, type=click.Path(),
              help="Demonstration store root.")
@click.option("--noise", default=0.1, show_default=True)
@click.option("--seed0", default=0, show_default=True)
@click.option("--skill", default=None, help="Skill name; defaults to task.")
def demo_gen(task, count, root, noise, seed0, skill):
    """Record scripted demonstrations into the episode store."""
    skill = skill or task
    paths = generate_dataset(task, count, root, noise_scale=noise,
                             seed0=seed0, skill=skill)
    episodes = load_dataset(root, skill)
    stats = dataset_stats(episodes)
    out = _out_dir(Path(root) / "reports" / skill)
    (out / "stats.json").write_text(
        json.dumps(stats.to_document(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    _write_csv(out / "episodes.csv", [
        {"episode": e.id, "frames": len(e.frames),
         "duration": e.duration, "success": e.success}
        for e in episodes])
    plotting.save_duration_histogram(stats, out / "durations.png")
    click.echo(f"recorded {len(paths)} demos for {skill!r}"
               f" (mean {stats.mean_duration:.2f}s), report in {out}")


@main.command("stats")
@click.option("--root", required=True, type=click.Path(exists=True))
@click.option("--skill", required=True)
@click.option("--include-failed", is_flag=True, default=False)
@click.option("--out", default=None, type=click.Path(),
              help="Also write stats.json, episodes.csv and a histogram.")
def stats_cmd(root, skill, include_failed, out):
    """Summarize a stored demonstration dataset."""
    episodes = load_dataset(root, skill, include_failed=include_failed)
    stats = dataset_stats(episodes)
    click.echo(json.dumps(stats.to_document(), indent=2, sort_keys=True))
    if out:
        out = _out_dir(out)
        (out / "stats.json").write_text(
            json.dumps(stats.to_document(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8")
        _write_csv(out / "episodes.csv", [
            {"episode": e.id, "frames": len(e.frames),
             "duration": e.duration, "success": e.success}
            for e in episodes])
        plotting.save_duration_histogram(stats, out / "durations.png")
        click.echo(f"report in {out}")


@main.command("train")
@click.option("--root", required=True, type=click.Path(exists=True),
              help="Demonstration store root.")
@click.option("--skill", required=True)
@click.option("--policies", required=True, type=click.Path(),
              help="Policy store root.")
@click.option("--epochs", default=600, show_default=True)
@click.option("--batch-size", default=256, show_default=True)
@click.option("--learning-rate", default=1e-3, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default=None, type=click.Path(),
              help="Report directory; defaults to the policy store.")
def train_cmd(root, skill, policies, epochs, batch_size, learning_rate,
              seed, out):
    """Train an action-chunk denoising policy on stored demonstrations."""
    from .recorder import episode_arrays
    episodes = load_dataset(root, skill)
    if not episodes:
        raise click.ClickException(f"no successful demos for {skill!r}"
                                   f" under {root}")
    obs, actions = episode_arrays(episodes[0])
    config = PolicyConfig(obs_dim=obs.shape[1], action_dim=actions.shape[1],
                          epochs=epochs, batch_size=batch_size,
                          learning_rate=learning_rate, seed=seed)

    with click.progressbar(length=epochs, label="training") as bar:
        def progress(epoch, loss):
            bar.update(1)

        policy = train_policy(episodes, config, progress=progress)
    policy_id = save_policy(policies, policy)
    out = _out_dir(out if out else policies)
    _write_csv(out / f"loss-{policy_id}.csv",
               [{"epoch": i, "loss": float(v)}
                for i, v in enumerate(policy.loss_curve)])
    plotting.save_loss_curve_figure(
        policy.loss_curve, out / f"loss-{policy_id}.png",
        title=f"{skill} ({len(episodes)} demos, {epochs} epochs)")
    click.echo(f"trained policy {policy_id} on {len(episodes)} episodes,"
               f" final probe loss {float(policy.loss_curve[-1]):.5f}")


@main.command("eval-policy")
@click.option("--policies", required=True, type=click.Path(exists=True))
@click.option("--policy-id", required=True)
@click.option("--task", required=True,
              type=click.Choice(["pick_place", "cap_removal",
                                 "crate_pushing"]))
@click.option("--trials", default=100, show_default=True)
@click.option("--seed0", default=1000, show_default=True)
@click.option("--latency", default=0, show_default=True,
              help="Artificial sampling latency in control ticks.")
@click.option("--out", required=True, type=click.Path())
def eval_policy(policies, policy_id, task, trials, seed0, latency, out):
    """Roll a trained policy out in the simulator and report outcomes."""
    policy = load_policy(policies, policy_id)
    with click.progressbar(length=trials, label="rollouts") as bar:
        report = run_policy_benchmark(policy, task, trials=trials,
                                      seed0=seed0, latency_ticks=latency,
                                      progress=lambda i, n: bar.update(1))
    out = _out_dir(out)
    save_report(report, out / "report.json")
    _write_csv(out / "records.csv", report.records)
    plotting.save_rollout_figure(report, out / "rollouts.png")
    s = report.summary
    line = (f"{task}: {s['successes']}/{s['trials']} successes"
            f" ({s['success_rate']:.2f})")
    if "mean_final_iou" in s:
        line += f", mean final IoU {s['mean_final_iou']:.3f}"
    click.echo(line + f", report in {out}")


@main.command("scenario")
@click.option("--out", required=True, type=click.Path())
@click.option("--seed", default=0, show_default=True)
def scenario_cmd(out, seed):
    """Run the scripted six-beat session and report every outcome."""
    out = _out_dir(out)
    orch = Orchestrator(
        data_root=str(out / "data"),
        transcript=Transcript(path=out / "transcript.jsonl"))
    results = scenario_run(orch, seed=seed)
    docs = [r.to_document() for r in results]
    with open(out / "outcomes.jsonl", "w", encoding="utf-8") as f:
        for doc in docs:
            f.write(json.dumps(doc, sort_keys=True) + "\n")
    _write_csv(out / "outcomes.csv", docs)
    plotting.save_scenario_figure(docs, out / "timeline.png")
    plotting.save_scene_figure(orch.scene, out / "final_scene.png",
                               title="workspace after the session")
    for doc in docs:
        skill = doc.get("skill") or "-"
        click.echo(f"{doc['kind']:16s} {skill:14s} {doc['request']}")
    click.echo(f"report in {out}")


@main.command("serve")
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True))
@click.option("--host", default=None, help="Override the configured host.")
@click.option("--port", default=None, type=int,
              help="Override the configured port.")
def serve(config_path, host, port):
    """Serve the orchestrator HTTP API."""
    import uvicorn

    from .service import create_app
    config = load_config(config_path)
    orch = build_orchestrator(config)
    app = create_app(orch)
    uvicorn.run(app, host=host or config.host, port=port or config.port)


if __name__ == "__main__":
    main()
