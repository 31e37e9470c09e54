"""Checkpoint selection strategies and their comparison.

Three ways to pick a checkpoint from a fine-tuning run: best source-language
dev metric (no target data at all), lowest representation similarity against
a target (needs only unlabeled parallel probes), and best target-language dev
metric (an oracle, since zero-shot transfer forbids target labels).

The evaluation context keeps the three data sources in separate fields and
each strategy's code path reads exactly one of them, so the zero-shot
contract for the similarity strategy holds by construction: target dev
scores are never touched outside the oracle branch.
"""

from dataclasses import dataclass, field

SOURCE_DEV = "source_dev"
COS_SIM = "cos_sim"
TARGET_DEV = "target_dev"
STRATEGY_KINDS = (SOURCE_DEV, COS_SIM, TARGET_DEV)


@dataclass
class SelectionStrategy:
    kind: str
    target_lang: str | None = None

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.kind in (COS_SIM, TARGET_DEV) and not self.target_lang:
            raise ValueError(f"{self.kind} requires a target language")
        if self.kind == SOURCE_DEV and self.target_lang is not None:
            raise ValueError("source_dev takes no target language")


@dataclass
class EvalContext:
    """Per-step data each strategy may consult.

    source_dev: step -> dev metric on the source language (higher is better).
    xlrs:       target -> step -> similarity on the fixed probe set.
    target_dev: target -> step -> dev metric on that target (oracle only).
    """
    source_dev: dict | None = None
    xlrs: dict | None = None
    target_dev: dict | None = None


@dataclass
class SelectionOutcome:
    kind: str
    target_lang: str | None
    step: int
    criterion: float
    test_metric: float | None = None
    delta_vs_oracle: float | None = None


def _steps(cks) -> list[int]:
    steps = [ck.step for ck in cks]
    if not steps:
        raise ValueError("empty checkpoint list")
    if len(set(steps)) != len(steps):
        raise ValueError("duplicate checkpoint steps")
    return sorted(steps)


def _series_for(steps: list[int], table: dict | None, what: str) -> dict:
    if table is None:
        raise ValueError(f"strategy needs {what}, none provided")
    missing = [s for s in steps if s not in table]
    if missing:
        raise ValueError(f"{what} missing for steps {missing}")
    return table


def _pick(steps: list[int], series: dict, minimize: bool) -> tuple[int, float]:
    best_step, best_val = steps[0], series[steps[0]]
    for s in steps[1:]:
        v = series[s]
        better = v < best_val if minimize else v > best_val
        if better or v == best_val:  # ties go to the later step
            best_step, best_val = s, v
    return best_step, best_val


def select_checkpoint(cks, strat: SelectionStrategy,
                      ctx: EvalContext) -> SelectionOutcome:
    steps = _steps(cks)
    if strat.kind == SOURCE_DEV:
        series = _series_for(steps, ctx.source_dev, "source dev metrics")
        step, val = _pick(steps, series, minimize=False)
    elif strat.kind == COS_SIM:
        table = _series_for([], ctx.xlrs, "XLRS probe values")
        series = _series_for(steps, table.get(strat.target_lang),
                             f"XLRS values for {strat.target_lang!r}")
        step, val = _pick(steps, series, minimize=True)
    else:
        table = _series_for([], ctx.target_dev, "target dev metrics")
        series = _series_for(steps, table.get(strat.target_lang),
                             f"target dev metrics for {strat.target_lang!r}")
        step, val = _pick(steps, series, minimize=False)
    return SelectionOutcome(strat.kind, strat.target_lang, step, val)


@dataclass
class ComparisonRow:
    kind: str
    per_target: dict  # target -> test metric at the step this strategy chose
    chosen_steps: dict  # target -> step
    mean_delta: float


@dataclass
class StrategyComparison:
    targets: list[str]
    rows: list[ComparisonRow] = field(default_factory=list)

    def to_csv(self) -> str:
        lines = ["strategy,target,metric,delta_vs_oracle"]
        oracle = {r.kind: r for r in self.rows}.get(TARGET_DEV)
        for row in self.rows:
            for t in self.targets:
                delta = row.per_target[t] - oracle.per_target[t]
                lines.append(f"{row.kind},{t},{row.per_target[t]:.6f},{delta:.6f}")
        return "\n".join(lines) + "\n"

    def to_markdown(self) -> str:
        head = "| strategy | " + " | ".join(self.targets) + " | Δ |"
        sep = "|" + "---|" * (len(self.targets) + 2)
        lines = [head, sep]
        for row in self.rows:
            cells = [f"{100.0 * row.per_target[t]:.2f}" for t in self.targets]
            lines.append(f"| {row.kind} | " + " | ".join(cells)
                         + f" | {100.0 * row.mean_delta:+.2f} |")
        return "\n".join(lines) + "\n"


def compare_strategies(cks, kinds: list, ctx: EvalContext, targets: list,
                       test_scores: dict) -> StrategyComparison:
    """Tables layout: one row per strategy kind, one column per target.

    test_scores maps target -> step -> held-out test metric; the oracle row
    is always computed (it anchors the Δ column) whether or not requested.
    """
    steps = _steps(cks)
    for t in targets:
        _series_for(steps, test_scores.get(t), f"test scores for {t!r}")

    def row_for(kind: str) -> ComparisonRow:
        per_target, chosen = {}, {}
        for t in targets:
            target = None if kind == SOURCE_DEV else t
            out = select_checkpoint(cks, SelectionStrategy(kind, target), ctx)
            per_target[t] = test_scores[t][out.step]
            chosen[t] = out.step
        return ComparisonRow(kind, per_target, chosen, 0.0)

    oracle = row_for(TARGET_DEV)
    rows = []
    for kind in kinds:
        row = oracle if kind == TARGET_DEV else row_for(kind)
        row.mean_delta = sum(row.per_target[t] - oracle.per_target[t]
                             for t in targets) / len(targets)
        rows.append(row)
    if TARGET_DEV not in kinds:
        oracle.mean_delta = 0.0
        rows.append(oracle)
    return StrategyComparison(list(targets), rows)
