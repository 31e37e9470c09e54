"""Staged experiment runner.

Stages run in a fixed order (gen-corpus, pretrain, finetune, diagnose,
select, report), each persisting its artifacts under the output directory
and flipping a manifest flag on completion. Rerunning skips completed
stages, so a killed run picks up where it stopped. Every stage derives its
randomness from the root seed via stage_seed(root, name), which makes
partial reruns reproduce the uninterrupted run exactly.

Data-access contract: only the diagnose stage ever reads target-language
labels, and only for the oracle dev series and final test scoring; the
manifest records each stage's declared reads.
"""

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field

from .. import __version__
from .. import model as M
from .. import selection as sel
from .. import trainpipe as tp
from ..diagnostics import (XlrsProbe, accidental_translation_rate, lid_accuracy,
                           overlap_report, spearman_rho, task_metric, train_lid,
                           xlrs_to_csv)
from ..diagnostics.metrics import primary_metric
from ..synthlang import (build_vocab, export_jsonl, generate_parallel_corpus,
                         make_family, make_task_dataset)
from ..synthlang.languages import YES_ID, family_manifest
from ..synthlang.tasks import GEN_TASKS

STAGES = ("gen-corpus", "pretrain", "finetune", "diagnose", "select", "report")

DATA_ACCESS = {
    "gen-corpus": ["all splits, all languages: corpus text and gold labels written to disk"],
    "pretrain": ["train split, all languages: unlabeled text"],
    "finetune": ["train split, source languages: labeled instances",
                 "test split, source+targets: unlabeled parallel probe sentences"],
    "diagnose": ["dev split, source language: labeled",
                 "dev split, target languages: labeled (oracle selection series only)",
                 "test split, all languages: labeled (final scoring)"],
    "select": ["diagnose outputs only"],
    "report": ["prior stage outputs only"],
}


def stage_seed(root_seed: int, stage: str) -> int:
    """Per-stage seed: first 8 bytes of sha256("{root}:{stage}")."""
    digest = hashlib.sha256(f"{root_seed}:{stage}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass
class ExperimentManifest:
    config: dict
    seed: int
    out_dir: str
    stages: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)
    data_access: dict = field(default_factory=dict)
    code_version: str = __version__

    def path(self) -> str:
        return os.path.join(self.out_dir, "manifest.json")

    def done(self, stage: str) -> bool:
        return self.stages.get(stage, {}).get("status") == "done"

    def mark(self, stage: str, status: str, error: str | None = None) -> None:
        entry = {"status": status}
        if error is not None:
            entry["error"] = error
        self.stages[stage] = entry
        self.data_access[stage] = DATA_ACCESS[stage]
        self.save()

    def add_artifact(self, name: str, rel_path: str) -> None:
        self.artifacts[name] = rel_path

    def save(self) -> None:
        payload = asdict(self)
        del payload["out_dir"]  # implied by the file's location; keeps runs relocatable
        tmp = self.path() + ".tmp"
        with open(tmp, "w", encoding="utf-8") as f:
            json.dump(payload, f, ensure_ascii=False, indent=2, sort_keys=True)
            f.write("\n")
        os.replace(tmp, self.path())


def load_manifest(out_dir: str) -> ExperimentManifest:
    with open(os.path.join(out_dir, "manifest.json"), encoding="utf-8") as f:
        raw = json.load(f)
    return ExperimentManifest(
        config=raw["config"], seed=raw["seed"], out_dir=out_dir,
        stages=raw.get("stages", {}), artifacts=raw.get("artifacts", {}),
        data_access=raw.get("data_access", {}),
        code_version=raw.get("code_version", __version__))


# -- deterministic rebuilds (cheaper than re-reading our own artifacts) ---------

def _family(mf: ExperimentManifest):
    cfg = mf.config
    specs = [(l["lang_id"], l["alphabet_id"], l["order_rule"], l["lexical_overlap"])
             for l in cfg["languages"]]
    order = {l["lang_id"]: i for i, l in enumerate(cfg["languages"])}
    # the reference language comes first so overlap copies from the source
    specs.sort(key=lambda s: (s[0] != cfg["source_lang"], order[s[0]]))
    return make_family(stage_seed(mf.seed, "family"), specs)


def _corpus_vocab(mf: ExperimentManifest):
    fam = _family(mf)
    corpus = generate_parallel_corpus(fam, mf.config["corpus_size"],
                                      seed=stage_seed(mf.seed, "corpus"))
    return fam, corpus, build_vocab(corpus, family=fam)


def _model_config(mf: ExperimentManifest, vocab_size: int) -> M.TransformerConfig:
    return M.TransformerConfig(vocab_size=vocab_size, **mf.config["model"])


def _train_config(mf: ExperimentManifest, section: str, seed_label: str) -> tp.TrainConfig:
    return tp.TrainConfig(seed=stage_seed(mf.seed, seed_label),
                          **mf.config[section])


def _source_sets(mf: ExperimentManifest) -> list[list[str]]:
    sets = [[mf.config["source_lang"]]]
    if mf.config["aux_lang"]:
        sets.append(sorted([mf.config["source_lang"], mf.config["aux_lang"]]))
    return sets


def _run_label(langs: list[str]) -> str:
    return "+".join(langs)


def _spec_of(fam, lang: str):
    for spec in fam:
        if spec.lang_id == lang:
            return spec
    raise ValueError(f"no language {lang!r} in family")


def _ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _checkpoint_files(run_dir: str) -> list[str]:
    names = sorted(n for n in os.listdir(run_dir)
                   if n.startswith("step_") and n.endswith(".ckpt"))
    return [os.path.join(run_dir, n) for n in names]


# -- stages ----------------------------------------------------------------------

def _stage_gen_corpus(mf: ExperimentManifest) -> None:
    fam, corpus, vocab = _corpus_vocab(mf)
    cdir = _ensure_dir(os.path.join(mf.out_dir, "corpus"))

    with open(os.path.join(cdir, "family.json"), "w", encoding="utf-8") as f:
        json.dump(family_manifest(fam), f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")
    with open(os.path.join(cdir, "corpus.jsonl"), "w", encoding="utf-8") as f:
        for i in range(len(corpus)):
            row = {"idx": i, "split": corpus.splits[i],
                   "renderings": {lang: corpus.renderings[lang][i]
                                  for lang in sorted(corpus.renderings)}}
            f.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
    with open(os.path.join(cdir, "vocab.txt"), "w", encoding="utf-8") as f:
        for tok in vocab.id_to_token:
            f.write(tok + "\n")

    tdir = _ensure_dir(os.path.join(cdir, "tasks"))
    for task in mf.config["tasks"]:
        for spec in fam:
            insts, _ = make_task_dataset(corpus, task, spec)
            export_jsonl(insts, os.path.join(_ensure_dir(os.path.join(tdir, task)),
                                             f"{spec.lang_id}.jsonl"))
    mf.add_artifact("corpus", "corpus/corpus.jsonl")
    mf.add_artifact("family", "corpus/family.json")
    mf.add_artifact("vocab", "corpus/vocab.txt")


def _stage_pretrain(mf: ExperimentManifest) -> None:
    fam, corpus, vocab = _corpus_vocab(mf)
    pdir = _ensure_dir(os.path.join(mf.out_dir, "pretrain"))
    stale = os.path.join(pdir, "log.jsonl")
    if os.path.exists(stale):
        os.remove(stale)
    cfg = _train_config(mf, "pretrain", "pretrain")
    p = M.init_params(_model_config(mf, len(vocab)), stage_seed(mf.seed, "init"))
    p = tp.pretrain_span_denoise(p, corpus, vocab, cfg,
                                 log_path=os.path.join(pdir, "log.jsonl"))
    ck = tp.Checkpoint(
        config={"model": asdict(p.cfg), "train": asdict(cfg)},
        step=cfg.epochs * cfg.steps_per_epoch(),
        params=p, opt=tp.OptimizerState.init(p),
        rng_state={}, provenance={"stage": "pretrain",
                                  "source_langs": sorted(corpus.renderings)})
    tp.save_checkpoint(ck, os.path.join(pdir, "pretrain.ckpt"))
    mf.add_artifact("pretrain_checkpoint", "pretrain/pretrain.ckpt")


def _finetune_run(mf: ExperimentManifest, task: str, langs: list[str],
                  fam, corpus, vocab, resume: bool) -> None:
    label = _run_label(langs)
    run_dir = _ensure_dir(os.path.join(mf.out_dir, "finetune", task, label))
    cfg = _train_config(mf, "finetune", f"finetune:{task}:{label}")

    datasets = {lang: make_task_dataset(corpus, task, _spec_of(fam, lang),
                                        split="train")[0]
                for lang in langs}
    mix = tp.mix_sources(datasets, mf.config["finetune"]["train_budget"],
                         seed=stage_seed(mf.seed, f"mix:{task}:{label}"))

    resume_ck = None
    training_done = False
    existing = _checkpoint_files(run_dir) if resume else []
    if existing:
        resume_ck = tp.load_checkpoint(existing[-1])
        total = cfg.epochs * math.ceil(len(mix) / cfg.batch_size)
        training_done = resume_ck.step >= total
        params = resume_ck.params
    else:
        for stale in _checkpoint_files(run_dir):
            os.remove(stale)
        for name in ("log.jsonl", "xlrs.csv"):
            stale = os.path.join(run_dir, name)
            if os.path.exists(stale):
                os.remove(stale)
        pre = tp.load_checkpoint(os.path.join(mf.out_dir, "pretrain", "pretrain.ckpt"))
        params = pre.params

    if not training_done:
        cks, _ = tp.finetune(params, mix, cfg, vocab,
                             log_path=os.path.join(run_dir, "log.jsonl"),
                             resume=resume_ck)
        for ck in cks:
            tp.save_checkpoint(ck, os.path.join(run_dir, f"step_{ck.step:06d}.ckpt"))

    # measure the XLRS trajectory post hoc over saved checkpoints so the CSV
    # is complete and identical whether or not the run was interrupted
    probe = XlrsProbe(corpus, vocab, mf.config["source_lang"],
                      mf.config["target_langs"], n_sample=mf.config["xlrs_sample"],
                      seed=stage_seed(mf.seed, "probe"), split="test")
    pre = tp.load_checkpoint(os.path.join(mf.out_dir, "pretrain", "pretrain.ckpt"))
    records = list(probe.measure(pre.params, 0))
    for path in _checkpoint_files(run_dir):
        ck = tp.load_checkpoint(path)
        records.extend(probe.measure(ck.params, ck.step))
    with open(os.path.join(run_dir, "xlrs.csv"), "w", encoding="utf-8") as f:
        f.write(xlrs_to_csv(records))


def _stage_finetune(mf: ExperimentManifest, resume: bool) -> None:
    fam, corpus, vocab = _corpus_vocab(mf)
    for task in mf.config["tasks"]:
        for langs in _source_sets(mf):
            _finetune_run(mf, task, langs, fam, corpus, vocab, resume)
    mf.add_artifact("finetune_root", "finetune")


def _encode_inputs(vocab, insts):
    return [vocab.encode(i.input_text) + [M.EOS_ID] for i in insts]


def _greedy_predictions(p, vocab, insts, max_new: int, chunk: int = 64) -> list[str]:
    ids = _encode_inputs(vocab, insts)
    out = []
    for lo in range(0, len(ids), chunk):
        for o in M.greedy_generate_batch(p, ids[lo:lo + chunk], max_new=max_new):
            out.append(vocab.decode(o))
    return out


def _metric_on(p, vocab, insts, task: str, max_new: int,
               yes_words: set | None = None) -> float:
    preds = _greedy_predictions(p, vocab, insts, max_new)
    return task_metric(task, preds, insts, yes_words)[primary_metric(task)]


def _stage_diagnose(mf: ExperimentManifest) -> None:
    fam, corpus, vocab = _corpus_vocab(mf)
    src = mf.config["source_lang"]
    targets = mf.config["target_langs"]
    max_new = mf.config["max_new_tokens"]
    cap = mf.config["eval_samples"]
    lid = train_lid(corpus)
    # zero-shot classification is scored on the decision, not on which
    # language's answer word the model picked
    yes_words = {spec.cipher[YES_ID] for spec in fam}

    ddir = _ensure_dir(os.path.join(mf.out_dir, "diagnose"))
    with open(os.path.join(ddir, "lid.json"), "w", encoding="utf-8") as f:
        json.dump({"test_accuracy": lid_accuracy(lid, corpus)}, f, sort_keys=True)
        f.write("\n")

    corr_points: dict[str, list] = {task: [] for task in mf.config["tasks"]}
    for task in mf.config["tasks"]:
        datasets = {spec.lang_id: make_task_dataset(corpus, task, spec)[0]
                    for spec in fam}
        rep = overlap_report(datasets, src, targets)
        tdir = _ensure_dir(os.path.join(ddir, task))
        with open(os.path.join(tdir, "overlap.csv"), "w", encoding="utf-8") as f:
            f.write("target,overlap\n")
            for t in targets:
                f.write(f"{t},{rep.per_target[t]:.6f}\n")
            f.write(f"aggregate,{rep.aggregate:.6f}\n")

        dev = {lang: [i for i in datasets[lang] if i.split == "dev"][:cap]
               for lang in datasets}
        test = {lang: [i for i in datasets[lang] if i.split == "test"][:cap]
                for lang in datasets}

        for langs in _source_sets(mf):
            label = _run_label(langs)
            run_dir = os.path.join(mf.out_dir, "finetune", task, label)
            xlrs_series = _read_xlrs_csv(os.path.join(run_dir, "xlrs.csv"))
            scores = {"steps": [], "source_dev": {}, "target_dev": {t: {} for t in targets},
                      "test": {t: {} for t in targets}}
            for path in _checkpoint_files(run_dir):
                ck = tp.load_checkpoint(path)
                step = ck.step
                scores["steps"].append(step)
                scores["source_dev"][str(step)] = _metric_on(
                    ck.params, vocab, dev[src], task, max_new, yes_words)
                for t in targets:
                    scores["target_dev"][t][str(step)] = _metric_on(
                        ck.params, vocab, dev[t], task, max_new, yes_words)
                    y = _metric_on(ck.params, vocab, test[t], task, max_new,
                                   yes_words)
                    scores["test"][t][str(step)] = y
                    corr_points[task].append((xlrs_series[t][step], y))
            out_dir = _ensure_dir(os.path.join(tdir, label))
            with open(os.path.join(out_dir, "scores.json"), "w", encoding="utf-8") as f:
                json.dump(scores, f, sort_keys=True, indent=2)
                f.write("\n")

            if task in GEN_TASKS:
                ck = tp.load_checkpoint(_checkpoint_files(run_dir)[-1])
                with open(os.path.join(out_dir, "accidental_translation.csv"),
                          "w", encoding="utf-8") as f:
                    f.write("target,rate,mean_conf_expected\n")
                    for t in targets:
                        preds = _greedy_predictions(ck.params, vocab, test[t], max_new)
                        rep_at = accidental_translation_rate(lid, preds, t,
                                                             source_lang=src)
                        f.write(f"{t},{rep_at.rate:.6f},"
                                f"{rep_at.mean_conf_expected:.6f}\n")

    with open(os.path.join(ddir, "correlation.csv"), "w", encoding="utf-8") as f:
        f.write("task,rho,p_value,n\n")
        for task in mf.config["tasks"]:
            pts = corr_points[task]
            xs = [a for a, _ in pts]
            ys = [b for _, b in pts]
            if len(pts) >= 3 and len(set(xs)) > 1 and len(set(ys)) > 1:
                r = spearman_rho(xs, ys, n_perm=10000,
                                 seed=stage_seed(mf.seed, "correlation"))
                f.write(f"{task},{r.rho:.6f},{r.p_value:.6f},{r.n}\n")
            else:
                f.write(f"{task},nan,nan,{len(pts)}\n")
    mf.add_artifact("diagnose_root", "diagnose")


def _read_xlrs_csv(path: str) -> dict:
    series: dict[str, dict[int, float]] = {}
    with open(path, encoding="utf-8") as f:
        next(f)
        for line in f:
            step, _, target, value, _ = line.strip().split(",")
            series.setdefault(target, {})[int(step)] = float(value)
    return series


def _stage_select(mf: ExperimentManifest) -> None:
    targets = mf.config["target_langs"]
    for task in mf.config["tasks"]:
        for langs in _source_sets(mf):
            label = _run_label(langs)
            run_dir = os.path.join(mf.out_dir, "finetune", task, label)
            with open(os.path.join(mf.out_dir, "diagnose", task, label,
                                   "scores.json"), encoding="utf-8") as f:
                scores = json.load(f)
            steps = scores["steps"]
            cks = [tp.Checkpoint({}, s, None, None, {}, {}) for s in steps]
            ctx = sel.EvalContext(
                source_dev={s: scores["source_dev"][str(s)] for s in steps},
                xlrs=_read_xlrs_csv(os.path.join(run_dir, "xlrs.csv")),
                target_dev={t: {s: scores["target_dev"][t][str(s)] for s in steps}
                            for t in targets})
            test_scores = {t: {s: scores["test"][t][str(s)] for s in steps}
                           for t in targets}
            cmp = sel.compare_strategies(
                cks, [sel.SOURCE_DEV, sel.COS_SIM, sel.TARGET_DEV],
                ctx, targets, test_scores)
            sdir = _ensure_dir(os.path.join(mf.out_dir, "select", task, label))
            with open(os.path.join(sdir, "comparison.csv"), "w", encoding="utf-8") as f:
                f.write(cmp.to_csv())
            with open(os.path.join(sdir, "comparison.md"), "w", encoding="utf-8") as f:
                f.write(cmp.to_markdown())
    mf.add_artifact("select_root", "select")


def _stage_report(mf: ExperimentManifest) -> None:
    from .report import emit_report
    emit_report(mf)
    mf.add_artifact("report", "report/report.md")


def run_stage(mf: ExperimentManifest, stage: str, resume: bool = False) -> None:
    if stage == "gen-corpus":
        _stage_gen_corpus(mf)
    elif stage == "pretrain":
        _stage_pretrain(mf)
    elif stage == "finetune":
        _stage_finetune(mf, resume)
    elif stage == "diagnose":
        _stage_diagnose(mf)
    elif stage == "select":
        _stage_select(mf)
    elif stage == "report":
        _stage_report(mf)
    else:
        raise ValueError(f"unknown stage {stage!r}")


def run_experiment(mf: ExperimentManifest, upto: str = "report",
                   resume: bool = False) -> int:
    """Run stages in order up to and including `upto`; returns an exit code."""
    if upto not in STAGES:
        raise ValueError(f"unknown stage {upto!r}")
    _ensure_dir(mf.out_dir)
    mf.save()
    for stage in STAGES[:STAGES.index(upto) + 1]:
        if mf.done(stage):
            continue
        try:
            run_stage(mf, stage, resume=resume)
        except Exception as e:  # the manifest must record the failure
            mf.mark(stage, "failed", error=f"{type(e).__name__}: {e}")
            return 2
        mf.mark(stage, "done")
    return 0
