"""Figure rendering for reports: benchmark accuracy, training curves,
rollout outcomes, and top-down scene views.

Everything draws through the Agg backend and writes straight to file,
so the CLI stays usable on headless boxes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402 - backend must be set first
import numpy as np  # noqa: E402
from matplotlib import patches, transforms  # noqa: E402

# fixed palette for the tabletop props; anything unknown gets grey
_KIND_COLORS = {
    "white_bowl": "#f2f2f2",
    "pan_cover": "#8c8c8c",
    "bottle": "#7a4b1f",
    "green_plate": "#57a05c",
    "red_bowl": "#c24a42",
    "crate": "#b08d57",
    "lid": "#708090",
    "sugar_box": "#e8c077",
    "goal_marking": "#9ecae1",
}


def _finish(fig, path) -> str:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return str(path)


def save_match_accuracy_figure(report, path) -> str:
    """Bar chart of match accuracy grouped by offered-library size."""
    by_size: dict[int, list[bool]] = {}
    for rec in report.records:
        by_size.setdefault(len(rec["subset"]), []).append(rec["correct"])
    sizes = sorted(by_size)
    rates = [float(np.mean(by_size[s])) for s in sizes]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar([str(s) for s in sizes], rates, color="#4878b0")
    overall = report.summary.get("accuracy", 0.0)
    ax.axhline(overall, color="#333333", linestyle="--", linewidth=1,
               label=f"overall {overall:.3f}")
    for ref_name, ref in (report.annotations or {}).get("reference",
                                                        {}).items():
        ax.axhline(ref, color="#c44e52", linestyle=":", linewidth=1,
                   label=f"{ref_name} {ref:.3f}")
    ax.set_xlabel("skills offered")
    ax.set_ylabel("match accuracy")
    ax.set_ylim(0, 1.05)
    ax.set_title(f"Skill matching, {report.summary.get('cases', 0)} cases")
    ax.legend(loc="lower right", fontsize=8)
    return _finish(fig, path)


def save_precond_accuracy_figure(report, path) -> str:
    """Per-skill accuracy bars for the feasibility-check benchmark."""
    by_skill: dict[str, list[bool]] = {}
    for rec in report.records:
        by_skill.setdefault(rec["skill"], []).append(rec["correct"])
    names = sorted(by_skill)
    rates = [float(np.mean(by_skill[n])) for n in names]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(names, rates, color="#6aa84f")
    overall = report.summary.get("accuracy", 0.0)
    ax.axhline(overall, color="#333333", linestyle="--", linewidth=1,
               label=f"overall {overall:.3f}")
    ax.set_ylabel("feasibility-check accuracy")
    ax.set_ylim(0, 1.05)
    ax.tick_params(axis="x", labelrotation=20)
    ax.set_title(f"Precondition checks, {report.summary.get('cases', 0)}"
                 " cases")
    ax.legend(loc="lower right", fontsize=8)
    return _finish(fig, path)


def save_loss_curve_figure(loss_curve, path, title="Training loss") -> str:
    curve = np.asarray(loss_curve, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.semilogy(np.arange(len(curve)), curve, color="#4878b0")
    ax.set_xlabel("epoch")
    ax.set_ylabel("probe loss")
    ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    return _finish(fig, path)


def save_rollout_figure(report, path) -> str:
    """Tick histogram plus a success/IoU panel for rollout benchmarks."""
    records = report.records
    ticks = [r["ticks"] for r in records]
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    axes[0].hist(ticks, bins=20, color="#4878b0")
    axes[0].set_xlabel("ticks to finish")
    axes[0].set_ylabel("episodes")
    axes[0].set_title("Episode length")
    ious = [r["final_iou"] for r in records
            if r.get("final_iou") is not None]
    if ious:
        axes[1].hist(ious, bins=20, color="#6aa84f")
        axes[1].set_xlabel("final overlap (IoU)")
        axes[1].set_title(
            f"mean IoU {float(np.mean(ious)):.3f}")
    else:
        rate = report.summary.get("success_rate", 0.0)
        axes[1].bar(["success", "failure"],
                    [rate, 1.0 - rate], color=["#6aa84f", "#c24a42"])
        axes[1].set_ylim(0, 1.05)
        axes[1].set_title(f"success rate {rate:.2f}")
    fig.suptitle(report.config.get("task", ""), fontsize=10)
    return _finish(fig, path)


def _draw_object(ax, obj):
    x, y, theta = obj.pose
    color = _KIND_COLORS.get(obj.kind, "#bbbbbb")
    alpha = 0.55 if obj.layer > 0 else 0.9
    if obj.shape[0] == "disc":
        patch = patches.Circle((x, y), obj.shape[1], facecolor=color,
                               edgecolor="#333333", linewidth=0.8,
                               alpha=alpha)
    else:
        _, w, h = obj.shape
        patch = patches.Rectangle((x - w / 2, y - h / 2), w, h,
                                  facecolor=color, edgecolor="#333333",
                                  linewidth=0.8, alpha=alpha)
        rotation = transforms.Affine2D().rotate_around(x, y, theta)
        patch.set_transform(rotation + ax.transData)
    ax.add_patch(patch)
    ax.annotate(obj.id, (x, y), ha="center", va="center", fontsize=6)


def save_scene_figure(state, path, title=None) -> str:
    """Top-down view of the workspace: props as rotated rectangles, the
    end effector as a marker whose fill tracks the gripper."""
    fig, ax = plt.subplots(figsize=(5, 5))
    x0, y0, x1, y1 = state.bounds
    ax.add_patch(patches.Rectangle((x0, y0), x1 - x0, y1 - y0,
                                   facecolor="#fdf6ec",
                                   edgecolor="#555555"))
    for obj in sorted(state.objects, key=lambda o: o.layer):
        _draw_object(ax, obj)
    ex, ey, _ = state.ee.pose
    closed = state.ee.gripper > 0.5
    ax.plot([ex], [ey], marker="o", markersize=9,
            markerfacecolor="#222222" if closed else "none",
            markeredgecolor="#222222")
    margin = 0.05
    ax.set_xlim(x0 - margin, x1 + margin)
    ax.set_ylim(y0 - margin, y1 + margin)
    ax.set_aspect("equal")
    ax.set_title(title or f"{state.task} @ t={state.time:.1f}s", fontsize=9)
    return _finish(fig, path)


_OUTCOME_COLORS = {
    "executed": "#6aa84f",
    "teach_requested": "#e6a23c",
    "blocked": "#c24a42",
    "error": "#7a4b9d",
}


def save_scenario_figure(outcomes, path) -> str:
    """Horizontal timeline of prompt outcomes for a scripted session."""
    fig, ax = plt.subplots(figsize=(8, 0.8 + 0.5 * len(outcomes)))
    for i, doc in enumerate(outcomes):
        y = len(outcomes) - 1 - i
        color = _OUTCOME_COLORS.get(doc["kind"], "#bbbbbb")
        ax.barh(y, 1.0, color=color, edgecolor="#333333", height=0.6)
        label = doc["kind"]
        if doc.get("skill"):
            label += f": {doc['skill']}"
        if doc.get("ticks") is not None:
            label += f" ({doc['ticks']} ticks)"
        ax.text(0.02, y, label, va="center", fontsize=8)
        ax.text(-0.02, y, doc.get("request", ""), va="center", ha="right",
                fontsize=7)
    ax.set_xlim(-1.1, 1.05)
    ax.set_ylim(-0.6, len(outcomes) - 0.4)
    ax.axis("off")
    ax.set_title("Prompt outcomes", fontsize=10)
    return _finish(fig, path)


def save_duration_histogram(stats, path) -> str:
    """Histogram straight from precomputed (lo, hi, count) duration bins."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for lo, hi, count in stats.histogram:
        ax.bar((lo + hi) / 2, count, width=(hi - lo) * 0.9,
               color="#4878b0", edgecolor="#333333", linewidth=0.5)
    ax.axvline(stats.mean_duration, color="#c44e52", linestyle="--",
               linewidth=1,
               label=f"mean {stats.mean_duration:.1f}s")
    ax.set_xlabel("episode duration (s)")
    ax.set_ylabel("episodes")
    ax.set_title(f"{stats.count} demonstrations")
    ax.legend(fontsize=8)
    return _finish(fig, path)
