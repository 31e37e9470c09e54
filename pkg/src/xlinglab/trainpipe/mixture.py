"""Fixed-budget data mixtures over one or more source languages."""

from dataclasses import dataclass

import numpy as np

from ..synthlang.tasks import TaskInstance

MIX_TAG = 0x31F0


@dataclass
class DataMixture:
    source_langs: list[str]
    per_lang: dict[str, list[TaskInstance]]
    order: list[tuple[str, int]]
    task: str

    def instances(self) -> list[TaskInstance]:
        return [self.per_lang[lang][i] for lang, i in self.order]

    def __len__(self) -> int:
        return len(self.order)


def mix_sources(datasets: dict[str, list[TaskInstance]], budget: int,
                seed: int) -> DataMixture:
    """Equal per-source allocation of `budget` instances (remainder goes to
    the alphabetically first languages), taking each language's leading
    instances, then shuffling the interleave order deterministically."""
    if not datasets:
        raise ValueError("no source languages")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    langs = sorted(datasets)
    base, rem = divmod(budget, len(langs))
    alloc = {lang: base + (1 if j < rem else 0) for j, lang in enumerate(langs)}
    for lang in langs:
        if len(datasets[lang]) < alloc[lang]:
            raise ValueError(
                f"{lang}: needs {alloc[lang]} instances, has {len(datasets[lang])}")

    tasks = {inst.task for insts in datasets.values() for inst in insts}
    if len(tasks) != 1:
        raise ValueError(f"mixture spans multiple tasks: {sorted(tasks)}")

    per_lang = {lang: list(datasets[lang][:alloc[lang]]) for lang in langs}
    order = [(lang, i) for lang in langs for i in range(alloc[lang])]
    rng = np.random.default_rng([seed, MIX_TAG])
    order = [order[j] for j in rng.permutation(len(order))]
    return DataMixture(langs, per_lang, order, tasks.pop())
