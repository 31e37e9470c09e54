"""Config validation and the staged experiment runner."""

import copy
import hashlib
import json
import os

import pytest

from xlinglab.cli import DEFAULT_CONFIG, load_manifest, validate_config
from xlinglab.cli.experiment import STAGES, run_experiment, stage_seed
from xlinglab.cli.main import main

MINI_CONFIG = {
    "seed": 3,
    "languages": [
        {"lang_id": "aa", "alphabet_id": 0, "order_rule": "identity", "lexical_overlap": 0.0},
        {"lang_id": "bb", "alphabet_id": 1, "order_rule": "verb_final", "lexical_overlap": 0.0},
        {"lang_id": "cc", "alphabet_id": 2, "order_rule": "reverse", "lexical_overlap": 0.0},
    ],
    "source_lang": "aa",
    "aux_lang": "bb",
    "target_langs": ["cc"],
    "corpus_size": 400,
    "tasks": ["TAG", "GEN_SUM"],
    "model": {"d_model": 32, "n_heads": 2, "n_enc_layers": 1, "n_dec_layers": 1,
              "d_ff": 48, "max_len": 48, "dropout_rate": 0.1},
    "pretrain": {"learning_rate": 1e-3, "batch_size": 16, "epochs": 2,
                 "train_budget": 320, "checkpoint_every": 100},
    "finetune": {"learning_rate": 1e-3, "batch_size": 16, "epochs": 2,
                 "train_budget": 64, "checkpoint_every": 4},
    "xlrs_sample": 32,
    "max_new_tokens": 6,
    "eval_samples": 24,
}


def write_config(path, overrides=None):
    cfg = copy.deepcopy(MINI_CONFIG)
    for key, val in (overrides or {}).items():
        if isinstance(val, dict):
            cfg[key].update(val)
        else:
            cfg[key] = val
    with open(path, "w", encoding="utf-8") as f:
        json.dump(cfg, f)
    return str(path)


def tree_digest(root):
    out = {}
    for dirpath, _, names in os.walk(root):
        for name in names:
            full = os.path.join(dirpath, name)
            rel = os.path.relpath(full, root)
            with open(full, "rb") as f:
                out[rel] = hashlib.sha256(f.read()).hexdigest()
    return out


@pytest.fixture(scope="module")
def ref_run(tmp_path_factory):
    """One completed mini run, shared read-only by the tests below."""
    base = tmp_path_factory.mktemp("ref")
    cfg = write_config(base / "cfg.json")
    out = str(base / "run")
    assert main(["run-all", "--config", cfg, "--out", out]) == 0
    return cfg, out


# -- config validation -------------------------------------------------------

def test_empty_config_is_fully_defaulted(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text("{}")
    cfg, errors = validate_config(str(path))
    assert errors == []
    assert cfg == DEFAULT_CONFIG
    assert cfg["finetune"]["batch_size"] == 32
    assert cfg["pretrain"]["learning_rate"] == 7e-5


def test_partial_section_keeps_other_defaults(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"finetune": {"epochs": 3}}))
    cfg, errors = validate_config(str(path))
    assert errors == []
    assert cfg["finetune"]["epochs"] == 3
    assert cfg["finetune"]["batch_size"] == 32


def test_out_of_range_overlap_is_a_single_named_error(tmp_path):
    langs = copy.deepcopy(DEFAULT_CONFIG["languages"])
    langs[2]["lexical_overlap"] = 1.5
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"languages": langs}))
    _, errors = validate_config(str(path))
    assert len(errors) == 1
    assert "lexical_overlap" in errors[0]
    assert "languages[2]" in errors[0]


def test_errors_are_aggregated(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({
        "seed": -1,
        "tasks": ["TAG", "NOPE"],
        "model": {"d_model": 30},        # not divisible by n_heads=4
        "finetune": {"batch_size": 0},
        "nonsense_key": 1,
    }))
    _, errors = validate_config(str(path))
    text = "\n".join(errors)
    assert len(errors) >= 5
    assert "seed" in text
    assert "NOPE" in text
    assert "divisible" in text
    assert "finetune.batch_size" in text
    assert "nonsense_key" in text


def test_unreadable_and_malformed_configs(tmp_path):
    _, errors = validate_config(str(tmp_path / "missing.json"))
    assert len(errors) == 1 and "cannot read" in errors[0]
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    _, errors = validate_config(str(bad))
    assert len(errors) == 1 and "valid JSON" in errors[0]
    arr = tmp_path / "arr.json"
    arr.write_text("[1, 2]")
    _, errors = validate_config(str(arr))
    assert errors == ["config root must be a JSON object"]


def test_budget_must_fit_corpus(tmp_path):
    path = write_config(tmp_path / "cfg.json",
                        {"finetune": {"train_budget": 10000}})
    _, errors = validate_config(path)
    assert any("finetune.train_budget" in e for e in errors)


def test_invalid_config_exits_1(tmp_path, capsys):
    path = write_config(tmp_path / "cfg.json", {"source_lang": "zz"})
    assert main(["run-all", "--config", path, "--out", str(tmp_path / "o")]) == 1
    assert "source_lang" in capsys.readouterr().err


# -- seeds -------------------------------------------------------------------

def test_stage_seeds_differ_per_stage_and_root():
    seeds = {stage_seed(0, s) for s in STAGES}
    assert len(seeds) == len(STAGES)
    assert stage_seed(0, "pretrain") != stage_seed(1, "pretrain")
    assert stage_seed(7, "pretrain") == stage_seed(7, "pretrain")


def test_seed_flag_overrides_config(tmp_path):
    cfg = write_config(tmp_path / "cfg.json")
    out = tmp_path / "run"
    assert main(["gen-corpus", "--config", cfg, "--out", str(out),
                 "--seed", "9"]) == 0
    assert load_manifest(str(out)).seed == 9


# -- the full pipeline -------------------------------------------------------

def test_run_all_completes_and_writes_artifacts(ref_run):
    _, out = ref_run
    mf = load_manifest(out)
    assert all(mf.done(s) for s in STAGES)
    for rel in ("corpus/corpus.jsonl", "corpus/vocab.txt",
                "pretrain/pretrain.ckpt",
                "finetune/TAG/aa/xlrs.csv",
                "finetune/GEN_SUM/aa+bb/step_000008.ckpt",
                "diagnose/TAG/aa/scores.json",
                "diagnose/correlation.csv",
                "diagnose/GEN_SUM/aa/accidental_translation.csv",
                "select/GEN_SUM/aa/comparison.csv",
                "report/report.md"):
        assert os.path.exists(os.path.join(out, rel)), rel


def test_scores_cover_all_checkpoints_and_targets(ref_run):
    _, out = ref_run
    with open(os.path.join(out, "diagnose", "TAG", "aa", "scores.json")) as f:
        scores = json.load(f)
    assert scores["steps"] == [4, 8]
    assert set(scores["source_dev"]) == {"4", "8"}
    assert set(scores["test"]) == {"cc"}
    assert set(scores["test"]["cc"]) == {"4", "8"}
    for v in scores["test"]["cc"].values():
        assert 0.0 <= v <= 1.0


def test_rerun_is_a_noop(ref_run):
    cfg, out = ref_run
    before = tree_digest(out)
    assert main(["run-all", "--config", cfg, "--out", out]) == 0
    assert tree_digest(out) == before


def test_same_seed_runs_are_byte_identical(ref_run, tmp_path):
    cfg, out = ref_run
    other = str(tmp_path / "again")
    assert main(["run-all", "--config", cfg, "--out", other]) == 0
    assert tree_digest(other) == tree_digest(out)


def test_stage_command_requires_prerequisites(tmp_path, capsys):
    cfg = write_config(tmp_path / "cfg.json")
    assert main(["diagnose", "--config", cfg,
                 "--out", str(tmp_path / "fresh")]) == 2
    assert "gen-corpus" in capsys.readouterr().err


def test_completed_stage_command_is_a_noop(ref_run, capsys):
    cfg, out = ref_run
    assert main(["pretrain", "--config", cfg, "--out", out]) == 0
    assert "already done" in capsys.readouterr().out


def test_out_dir_with_other_config_is_refused(ref_run, tmp_path, capsys):
    _, out = ref_run
    other = write_config(tmp_path / "other.json", {"seed": 4})
    assert main(["run-all", "--config", other, "--out", out]) == 1
    assert "different config" in capsys.readouterr().err


def test_kill_after_finetune_resumes_without_retraining(ref_run, tmp_path):
    cfg, out = ref_run
    victim = str(tmp_path / "victim")
    for stage in ("gen-corpus", "pretrain", "finetune"):
        assert main([stage, "--config", cfg, "--out", victim]) == 0
    ckpts = {rel: h for rel, h in tree_digest(victim).items()
             if rel.endswith(".ckpt")}
    assert len(ckpts) == 9  # pretrain + 2 checkpoints x 2 tasks x 2 source sets

    assert main(["run-all", "--config", cfg, "--out", victim]) == 0
    after = tree_digest(victim)
    for rel, h in ckpts.items():
        assert after[rel] == h, f"{rel} was retrained"
    assert after == tree_digest(out)


def test_resume_continues_interrupted_finetune(ref_run, tmp_path):
    cfg, out = ref_run
    victim = str(tmp_path / "victim")
    for stage in ("gen-corpus", "pretrain", "finetune"):
        assert main([stage, "--config", cfg, "--out", victim]) == 0

    # simulate a kill between the step-4 and step-8 checkpoints of one run
    mf = load_manifest(victim)
    for stage in ("finetune",):
        mf.stages.pop(stage, None)
    mf.save()
    run_dir = os.path.join(victim, "finetune", "TAG", "aa")
    os.remove(os.path.join(run_dir, "step_000008.ckpt"))
    os.remove(os.path.join(run_dir, "xlrs.csv"))
    log = os.path.join(run_dir, "log.jsonl")
    with open(log) as f:
        rows = [l for l in f if json.loads(l)["step"] <= 4]
    with open(log, "w") as f:
        f.writelines(rows)

    assert main(["finetune", "--config", cfg, "--out", victim,
                 "--resume"]) == 0
    reference = {rel: h for rel, h in tree_digest(out).items()
                 if rel.split(os.sep)[0] in ("finetune", "pretrain", "corpus")}
    resumed = {rel: h for rel, h in tree_digest(victim).items()
               if rel in reference}
    assert resumed == reference


def test_stage_failure_marks_manifest_and_exits_2(ref_run, tmp_path, monkeypatch):
    cfg, _ = ref_run
    out = str(tmp_path / "boom")
    assert main(["gen-corpus", "--config", cfg, "--out", out]) == 0

    import xlinglab.cli.experiment as exp

    def explode(mf):
        raise RuntimeError("disk on fire")

    monkeypatch.setattr(exp, "_stage_pretrain", explode)
    assert main(["run-all", "--config", cfg, "--out", out]) == 2
    mf = load_manifest(out)
    assert mf.done("gen-corpus")
    assert mf.stages["pretrain"]["status"] == "failed"
    assert "disk on fire" in mf.stages["pretrain"]["error"]

    monkeypatch.undo()
    assert main(["run-all", "--config", cfg, "--out", out]) == 0
    assert load_manifest(out).done("report")


def test_report_shape(ref_run):
    _, out = ref_run
    with open(os.path.join(out, "report", "report.md")) as f:
        text = f.read()
    for heading in ("# Transfer run report",
                    "## Zero-shot test scores at the final checkpoint",
                    "## Similarity vs zero-shot score",
                    "## Checkpoint selection",
                    "## Output language of generated text"):
        assert heading in text
    assert "### GEN_SUM, trained on aa+bb" in text

    with open(os.path.join(out, "report", "metrics_TAG.csv")) as f:
        header = f.readline().strip()
    assert header == "source,cc"
    with open(os.path.join(out, "report", "xlrs_trajectories.csv")) as f:
        lines = f.read().splitlines()
    assert lines[0] == "task,sources,step,source,target,value"
    # 2 tasks x 2 source sets x 3 measured points (step 0 plus 2 checkpoints)
    assert len(lines) == 1 + 2 * 2 * 3


def test_report_correlation_stars_mark_small_p(tmp_path, monkeypatch):
    # drive the markdown renderer directly with a synthetic correlation file
    from xlinglab.cli.report import _correlation_markdown
    from xlinglab.cli.experiment import ExperimentManifest

    out = tmp_path / "r"
    (out / "diagnose").mkdir(parents=True)
    (out / "diagnose" / "correlation.csv").write_text(
        "task,rho,p_value,n\nTAG,0.91,0.0012,40\nGEN_SUM,-0.85,0.2,40\nSPANX,nan,nan,2\n")
    mf = ExperimentManifest(config={}, seed=0, out_dir=str(out))
    table = _correlation_markdown(mf)
    assert "| TAG | +0.910* | 0.0012 | 40 |" in table
    assert "| GEN_SUM | -0.850 | 0.2000 | 40 |" in table
    assert "| SPANX | n/a | n/a | 2 |" in table


def test_report_without_diagnose_names_missing_stage(ref_run, tmp_path):
    cfg, _ = ref_run
    out = str(tmp_path / "partial")
    for stage in ("gen-corpus", "pretrain", "finetune"):
        assert main([stage, "--config", cfg, "--out", out]) == 0
    mf = load_manifest(out)
    mf.stages["diagnose"] = {"status": "done"}   # lie about it
    mf.stages["select"] = {"status": "done"}
    mf.save()
    assert main(["report", "--config", cfg, "--out", out]) == 2
    assert "diagnose" in load_manifest(out).stages["report"]["error"]
