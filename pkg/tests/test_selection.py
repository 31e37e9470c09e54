"""Selection strategies against hand-built score tables."""

from types import SimpleNamespace

import numpy as np
import pytest

from xlinglab import selection as S


def cks_at(*steps):
    return [SimpleNamespace(step=s) for s in steps]


class PoisonDict(dict):
    """Raises on any read; proves a code path never consults the table."""

    def __getitem__(self, key):
        raise AssertionError("oracle data was read")

    def get(self, key, default=None):
        raise AssertionError("oracle data was read")

    def __contains__(self, key):
        raise AssertionError("oracle data was read")


def test_strategy_validation():
    S.SelectionStrategy(S.SOURCE_DEV)
    S.SelectionStrategy(S.COS_SIM, "tt")
    with pytest.raises(ValueError):
        S.SelectionStrategy("dev")
    with pytest.raises(ValueError):
        S.SelectionStrategy(S.COS_SIM)
    with pytest.raises(ValueError):
        S.SelectionStrategy(S.TARGET_DEV)
    with pytest.raises(ValueError):
        S.SelectionStrategy(S.SOURCE_DEV, "tt")


def test_cos_sim_picks_lowest_similarity():
    ctx = S.EvalContext(xlrs={"tt": {1: 0.9, 2: 0.7, 3: 0.8}})
    out = S.select_checkpoint(cks_at(1, 2, 3), S.SelectionStrategy(S.COS_SIM, "tt"), ctx)
    assert out.step == 2
    assert out.criterion == 0.7


def test_source_dev_picks_highest():
    ctx = S.EvalContext(source_dev={10: 0.4, 20: 0.9, 30: 0.5})
    out = S.select_checkpoint(cks_at(10, 20, 30), S.SelectionStrategy(S.SOURCE_DEV), ctx)
    assert out.step == 20 and out.criterion == 0.9


def test_single_checkpoint_under_every_strategy():
    ctx = S.EvalContext(source_dev={5: 0.1}, xlrs={"tt": {5: 0.99}},
                        target_dev={"tt": {5: 0.2}})
    for strat in (S.SelectionStrategy(S.SOURCE_DEV),
                  S.SelectionStrategy(S.COS_SIM, "tt"),
                  S.SelectionStrategy(S.TARGET_DEV, "tt")):
        assert S.select_checkpoint(cks_at(5), strat, ctx).step == 5


def test_ties_break_toward_later_step():
    ctx = S.EvalContext(source_dev={1: 0.5, 2: 0.5, 3: 0.4},
                        xlrs={"tt": {1: 0.7, 2: 0.6, 3: 0.6}})
    assert S.select_checkpoint(cks_at(1, 2, 3),
                               S.SelectionStrategy(S.SOURCE_DEV), ctx).step == 2
    assert S.select_checkpoint(cks_at(1, 2, 3),
                               S.SelectionStrategy(S.COS_SIM, "tt"), ctx).step == 3


def test_criterion_is_extremal_property():
    rng = np.random.default_rng(8)
    for _ in range(100):
        steps = sorted(rng.choice(1000, size=6, replace=False).tolist())
        dev = {s: float(rng.random()) for s in steps}
        xl = {s: float(rng.random()) for s in steps}
        ctx = S.EvalContext(source_dev=dev, xlrs={"tt": xl})
        hi = S.select_checkpoint(cks_at(*steps), S.SelectionStrategy(S.SOURCE_DEV), ctx)
        lo = S.select_checkpoint(cks_at(*steps), S.SelectionStrategy(S.COS_SIM, "tt"), ctx)
        assert hi.criterion == max(dev.values())
        assert lo.criterion == min(xl.values())


def test_oracle_dominates_on_its_own_dev_split():
    rng = np.random.default_rng(9)
    for _ in range(100):
        steps = list(range(1, 7))
        tdev = {s: float(rng.random()) for s in steps}
        xl = {s: float(rng.random()) for s in steps}
        ctx = S.EvalContext(xlrs={"tt": xl}, target_dev={"tt": tdev})
        oracle = S.select_checkpoint(cks_at(*steps), S.SelectionStrategy(S.TARGET_DEV, "tt"), ctx)
        by_sim = S.select_checkpoint(cks_at(*steps), S.SelectionStrategy(S.COS_SIM, "tt"), ctx)
        assert tdev[oracle.step] >= tdev[by_sim.step]


def test_cos_sim_never_reads_target_labels():
    ctx = S.EvalContext(xlrs={"tt": {1: 0.3, 2: 0.2}}, target_dev=PoisonDict())
    out = S.select_checkpoint(cks_at(1, 2), S.SelectionStrategy(S.COS_SIM, "tt"), ctx)
    assert out.step == 2


def test_missing_data_errors():
    cks = cks_at(1, 2)
    with pytest.raises(ValueError):
        S.select_checkpoint(cks, S.SelectionStrategy(S.SOURCE_DEV), S.EvalContext())
    with pytest.raises(ValueError):
        S.select_checkpoint(cks, S.SelectionStrategy(S.COS_SIM, "tt"),
                            S.EvalContext(xlrs={"other": {1: 0.1, 2: 0.2}}))
    with pytest.raises(ValueError):  # value absent for step 2
        S.select_checkpoint(cks, S.SelectionStrategy(S.SOURCE_DEV),
                            S.EvalContext(source_dev={1: 0.5}))
    with pytest.raises(ValueError):
        S.select_checkpoint([], S.SelectionStrategy(S.SOURCE_DEV),
                            S.EvalContext(source_dev={}))
    with pytest.raises(ValueError):
        S.select_checkpoint(cks_at(1, 1), S.SelectionStrategy(S.SOURCE_DEV),
                            S.EvalContext(source_dev={1: 0.5}))


def comparison_fixture():
    steps = [1, 2, 3]
    ctx = S.EvalContext(
        source_dev={1: 0.2, 2: 0.9, 3: 0.5},
        xlrs={"t1": {1: 0.9, 2: 0.8, 3: 0.4}, "t2": {1: 0.5, 2: 0.3, 3: 0.6}},
        target_dev={"t1": {1: 0.10, 2: 0.30, 3: 0.20},
                    "t2": {1: 0.40, 2: 0.10, 3: 0.30}})
    test_scores = {"t1": {1: 0.1, 2: 0.3, 3: 0.2},
                   "t2": {1: 0.4, 2: 0.1, 3: 0.3}}
    return cks_at(*steps), ctx, test_scores


def test_compare_strategies_layout_and_deltas():
    cks, ctx, test_scores = comparison_fixture()
    cmp = S.compare_strategies(cks, [S.SOURCE_DEV, S.COS_SIM, S.TARGET_DEV],
                               ctx, ["t1", "t2"], test_scores)
    assert [r.kind for r in cmp.rows] == [S.SOURCE_DEV, S.COS_SIM, S.TARGET_DEV]
    by_kind = {r.kind: r for r in cmp.rows}

    # source_dev chooses step 2 everywhere; cos_sim argmin per target (3, 2);
    # oracle argmax target dev per target (2, 1)
    assert by_kind[S.SOURCE_DEV].chosen_steps == {"t1": 2, "t2": 2}
    assert by_kind[S.COS_SIM].chosen_steps == {"t1": 3, "t2": 2}
    assert by_kind[S.TARGET_DEV].chosen_steps == {"t1": 2, "t2": 1}

    assert by_kind[S.TARGET_DEV].mean_delta == 0.0
    # source_dev: (0.3 - 0.3 + 0.1 - 0.4) / 2 = -0.15
    assert abs(by_kind[S.SOURCE_DEV].mean_delta - (-0.15)) < 1e-12
    # cos_sim: (0.2 - 0.3 + 0.1 - 0.4) / 2 = -0.2
    assert abs(by_kind[S.COS_SIM].mean_delta - (-0.2)) < 1e-12


def test_compare_adds_oracle_row_when_missing():
    cks, ctx, test_scores = comparison_fixture()
    cmp = S.compare_strategies(cks, [S.COS_SIM], ctx, ["t1", "t2"], test_scores)
    kinds = [r.kind for r in cmp.rows]
    assert kinds == [S.COS_SIM, S.TARGET_DEV]
    assert cmp.rows[-1].mean_delta == 0.0


def test_comparison_csv_and_markdown():
    cks, ctx, test_scores = comparison_fixture()
    cmp = S.compare_strategies(cks, [S.SOURCE_DEV, S.TARGET_DEV],
                               ctx, ["t1", "t2"], test_scores)
    csv = cmp.to_csv()
    lines = csv.strip().split("\n")
    assert lines[0] == "strategy,target,metric,delta_vs_oracle"
    assert len(lines) == 1 + 2 * 2
    assert "source_dev,t1,0.300000,0.000000" in lines
    assert "source_dev,t2,0.100000,-0.300000" in lines

    md = cmp.to_markdown().splitlines()
    assert md[0] == "| strategy | t1 | t2 | Δ |"
    assert any(r.startswith("| target_dev |") and r.endswith("| +0.00 |") for r in md)


def test_selection_is_deterministic():
    cks, ctx, test_scores = comparison_fixture()
    a = S.compare_strategies(cks, list(S.STRATEGY_KINDS), ctx, ["t1", "t2"], test_scores)
    b = S.compare_strategies(cks, list(S.STRATEGY_KINDS), ctx, ["t1", "t2"], test_scores)
    assert a.to_csv() == b.to_csv()
    assert a.to_markdown() == b.to_markdown()
