"""Assemble the per-run report from the artifacts earlier stages wrote.

Everything here is a pure function of files on disk; no model is loaded and
no randomness is involved, so a rerun always produces byte-identical output.
"""

import json
import os

from ..diagnostics import metric_table_csv, metric_table_markdown
from ..synthlang.tasks import GEN_TASKS
from .experiment import ExperimentManifest, _run_label, _source_sets


def _require(mf: ExperimentManifest, path: str, stage: str) -> str:
    full = os.path.join(mf.out_dir, path)
    if not os.path.exists(full):
        raise FileNotFoundError(
            f"report needs {path}, which the {stage!r} stage writes; "
            f"run that stage first")
    return full


def _read_scores(mf: ExperimentManifest, task: str, label: str) -> dict:
    path = _require(mf, os.path.join("diagnose", task, label, "scores.json"),
                    "diagnose")
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def _final_test_rows(mf: ExperimentManifest, task: str) -> dict:
    """Final-checkpoint test metric per source set, keyed for table rows."""
    rows = {}
    for langs in _source_sets(mf):
        label = _run_label(langs)
        scores = _read_scores(mf, task, label)
        last = str(scores["steps"][-1])
        rows[label] = {t: scores["test"][t][last] for t in mf.config["target_langs"]}
    return rows


def _xlrs_trajectory_csv(mf: ExperimentManifest) -> str:
    lines = ["task,sources,step,source,target,value"]
    for task in mf.config["tasks"]:
        for langs in _source_sets(mf):
            label = _run_label(langs)
            path = _require(mf, os.path.join("finetune", task, label, "xlrs.csv"),
                            "finetune")
            with open(path, encoding="utf-8") as f:
                next(f)
                for line in f:
                    step, src, tgt, value, _ = line.strip().split(",")
                    lines.append(f"{task},{label},{step},{src},{tgt},{value}")
    return "\n".join(lines) + "\n"


def _correlation_markdown(mf: ExperimentManifest) -> str:
    path = _require(mf, os.path.join("diagnose", "correlation.csv"), "diagnose")
    out = ["| task | rho | p | n |", "|---|---|---|---|"]
    with open(path, encoding="utf-8") as f:
        next(f)
        for line in f:
            task, rho, p, n = line.strip().split(",")
            if rho == "nan":
                out.append(f"| {task} | n/a | n/a | {n} |")
                continue
            star = "*" if float(p) < 0.05 else ""
            out.append(f"| {task} | {float(rho):+.3f}{star} | {float(p):.4f} | {n} |")
    return "\n".join(out) + "\n"


def _accidental_translation_markdown(mf: ExperimentManifest, task: str) -> str:
    out = ["| sources | target | wrong-language rate |", "|---|---|---|"]
    for langs in _source_sets(mf):
        label = _run_label(langs)
        path = _require(mf, os.path.join("diagnose", task, label,
                                         "accidental_translation.csv"), "diagnose")
        with open(path, encoding="utf-8") as f:
            next(f)
            for line in f:
                t, rate, _ = line.strip().split(",")
                out.append(f"| {label} | {t} | {100 * float(rate):.2f} |")
    return "\n".join(out) + "\n"


def emit_report(mf: ExperimentManifest) -> str:
    """Write report/report.md (plus per-task CSVs); returns the report path."""
    cfg = mf.config
    targets = cfg["target_langs"]
    rdir = os.path.join(mf.out_dir, "report")
    os.makedirs(rdir, exist_ok=True)

    lid_path = _require(mf, os.path.join("diagnose", "lid.json"), "diagnose")
    with open(lid_path, encoding="utf-8") as f:
        lid_acc = json.load(f)["test_accuracy"]

    parts = ["# Transfer run report", ""]
    parts.append(f"- seed: {cfg['seed']}")
    parts.append(f"- source: {cfg['source_lang']}"
                 + (f" (+ auxiliary {cfg['aux_lang']})" if cfg["aux_lang"] else ""))
    parts.append(f"- targets: {', '.join(targets)}")
    parts.append(f"- corpus: {cfg['corpus_size']} parallel sentences, "
                 f"{len(cfg['languages'])} languages")
    parts.append(f"- language-id probe accuracy (test split): {lid_acc:.4f}")
    parts.append("")

    parts.append("## Zero-shot test scores at the final checkpoint")
    parts.append("")
    for task in cfg["tasks"]:
        rows = _final_test_rows(mf, task)
        with open(os.path.join(rdir, f"metrics_{task}.csv"), "w",
                  encoding="utf-8") as f:
            f.write(metric_table_csv(rows, targets))
        parts.append(f"### {task}")
        parts.append("")
        parts.append(metric_table_markdown(rows, targets))

    parts.append("## Representation similarity trajectories")
    parts.append("")
    traj = _xlrs_trajectory_csv(mf)
    with open(os.path.join(rdir, "xlrs_trajectories.csv"), "w",
              encoding="utf-8") as f:
        f.write(traj)
    parts.append("Per-checkpoint similarity for every run and language pair: "
                 "`report/xlrs_trajectories.csv`.")
    parts.append("")

    parts.append("## Similarity vs zero-shot score")
    parts.append("")
    parts.append("Spearman rank correlation pooled over checkpoints, targets, "
                 "and source sets; `*` marks p < 0.05 under a permutation test.")
    parts.append("")
    parts.append(_correlation_markdown(mf))

    parts.append("## Checkpoint selection")
    parts.append("")
    for task in cfg["tasks"]:
        for langs in _source_sets(mf):
            label = _run_label(langs)
            path = _require(mf, os.path.join("select", task, label,
                                             "comparison.md"), "select")
            parts.append(f"### {task}, trained on {label}")
            parts.append("")
            with open(path, encoding="utf-8") as f:
                parts.append(f.read())

    gen_tasks = [t for t in cfg["tasks"] if t in GEN_TASKS]
    if gen_tasks:
        parts.append("## Output language of generated text")
        parts.append("")
        for task in gen_tasks:
            parts.append(f"### {task}")
            parts.append("")
            parts.append(_accidental_translation_markdown(mf, task))

    report_path = os.path.join(rdir, "report.md")
    with open(report_path, "w", encoding="utf-8") as f:
        f.write("\n".join(parts))
    return report_path
