"""Cross-lingual label overlap between aligned task instance lists."""

from dataclasses import dataclass

from ..synthlang.tasks import TaskInstance


def label_overlap(instances_s: list[TaskInstance],
                  instances_t: list[TaskInstance]) -> float:
    """Fraction of aligned pairs whose canonical labels match exactly."""
    if len(instances_s) != len(instances_t):
        raise ValueError(f"length mismatch: {len(instances_s)} vs {len(instances_t)}")
    if not instances_s:
        raise ValueError("empty instance lists")
    tasks = {i.task for i in instances_s} | {i.task for i in instances_t}
    if len(tasks) != 1:
        raise ValueError(f"mixed tasks: {sorted(tasks)}")
    hits = sum(a.gold_label == b.gold_label
               for a, b in zip(instances_s, instances_t))
    return hits / len(instances_s)


@dataclass
class OverlapReport:
    task: str
    per_target: dict[str, float]
    aggregate: float  # mean over targets


def overlap_report(datasets: dict[str, list[TaskInstance]], source: str,
                   targets: list[str]) -> OverlapReport:
    """Per-target overlap d(source, t) and its mean over targets."""
    if source not in datasets:
        raise ValueError(f"missing source {source!r}")
    per = {t: label_overlap(datasets[source], datasets[t]) for t in targets}
    task = datasets[source][0].task
    return OverlapReport(task, per, sum(per.values()) / len(per) if per else 0.0)
