"""Ranking the observed orders of a list and scoring that ranking.

For a list seen in several orders, the observed scores give a reference
ranking of those orders. A model ranks the same orders by its own predicted
score (payoff-gain) or probability (Plackett-Luce); the two rankings are
compared with NDCG, and the observed score of the model's top order is
averaged over lists.
"""

import logging
from collections.abc import Callable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import partial, singledispatch
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveInt

from order_ltr.core import Dataset, ItemList, Permutation
from order_ltr.errors import DimensionMismatchError, EvaluationError
from order_ltr.models import EvalRow
from order_ltr.payoff_gain import AltMinConfig, PayoffGainModel, predict_score, train_alternating
from order_ltr.plackett_luce import GDConfig, PLModel, pl_log_prob, train_pl

logger = logging.getLogger(__name__)

type Gain = Literal["linear", "exponential"]
type OrderScorer = Callable[[ItemList, Permutation], float]


@dataclass(frozen=True)
class OrderGroup:
    """One list and the distinct orders it was observed in, with their scores."""

    items: ItemList
    observed: tuple[tuple[Permutation, float], ...]

    def __post_init__(self):
        observed = tuple((perm, float(score)) for perm, score in self.observed)
        if not observed:
            raise ValueError("an order group needs at least one observed order")
        perms = [perm for perm, _ in observed]
        if len(set(perms)) != len(perms):
            raise ValueError("observed orders must be distinct")
        for perm, score in observed:
            if perm.n != self.items.n:
                raise DimensionMismatchError(f"order of length {perm.n} for a list of {self.items.n} items")
            if not np.isfinite(score) or score < 0:
                raise ValueError(f"observed scores must be finite and non-negative, got {score}")
        object.__setattr__(self, "observed", observed)

    @property
    def scores(self) -> np.ndarray:
        return np.array([score for _, score in self.observed])


class SplitConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    train_fraction: float = Field(default=0.8, gt=0, lt=1)
    num_repeats: PositiveInt = 10
    seed: int = 0


def ndcg(relevances_in_predicted_rank_order, gain: Gain = "linear") -> float:
    """DCG of the predicted ranking over DCG of the ideal one, discount 1/log₂(rank + 1)."""
    rel = np.asarray(relevances_in_predicted_rank_order, dtype=float)
    if rel.ndim != 1 or rel.size == 0:
        raise ValueError("ndcg needs a non-empty vector of relevances")
    if np.any(rel < 0) or not np.all(np.isfinite(rel)):
        raise ValueError("relevances must be finite and non-negative")
    if not np.any(rel > 0):
        raise ValueError("ndcg is undefined when every relevance is zero")
    if gain == "exponential":
        # 2^r − 1 scaled by 2^-max(r), which cancels in the ratio
        top = rel.max()
        gains = np.exp2(rel - top) - np.exp2(-top)
    else:
        gains = rel
    discounts = 1.0 / np.log2(np.arange(2, rel.size + 2))
    dcg = gains @ discounts
    idcg = np.sort(gains)[::-1] @ discounts
    return float(dcg / idcg)


@singledispatch
def model_scorer(model) -> OrderScorer:
    """How a model rates an order of a list: higher is better."""
    raise TypeError(f"no order scorer for {type(model).__name__}")


@model_scorer.register
def _(model: PLModel) -> OrderScorer:
    return partial(pl_log_prob, model)


@model_scorer.register
def _(model: PayoffGainModel) -> OrderScorer:
    return partial(predict_score, model)


def rank_orders_by_model(scorer: OrderScorer, group: OrderGroup) -> list[Permutation]:
    """Observed orders by descending model score; equal scores keep input order."""
    scores = [scorer(group.items, perm) for perm, _ in group.observed]
    ranked = sorted(range(len(scores)), key=lambda k: -scores[k])
    return [group.observed[k][0] for k in ranked]


def evaluate_groups(
    models: Mapping[str, PLModel | PayoffGainModel | OrderScorer],
    groups: Sequence[OrderGroup],
    gain: Gain = "linear",
) -> list[EvalRow]:
    """Average NDCG and top-1 observed score per model.

    Groups whose observed scores are all zero have no NDCG and are skipped
    (counted in ``num_skipped``). Single-order groups count, with NDCG 1.
    """
    if not groups:
        raise EvaluationError("no order groups to evaluate")
    usable = [group for group in groups if np.any(group.scores > 0)]
    skipped = len(groups) - len(usable)
    if skipped:
        logger.warning(f"Skipping {skipped} of {len(groups)} groups whose observed scores are all zero")
    if not usable:
        raise EvaluationError("every order group has only zero scores")
    singles = sum(1 for group in usable if len(group.observed) == 1)
    logger.info(f"Evaluating {len(models)} models on {len(usable)} groups ({singles} with a single order)")

    rows = []
    for name, model in models.items():
        scorer = model if callable(model) else model_scorer(model)
        ndcgs, tops = [], []
        for group in usable:
            observed = dict(group.observed)
            ranking = rank_orders_by_model(scorer, group)
            relevances = [observed[perm] for perm in ranking]
            ndcgs.append(ndcg(relevances, gain))
            tops.append(relevances[0])
        rows.append(
            EvalRow(
                model_name=name,
                avg_ndcg=float(np.mean(ndcgs)),
                top1_avg_score=float(np.mean(tops)),
                num_groups=len(usable),
                num_skipped=skipped,
            )
        )
    return rows


def group_sessions(data: Dataset) -> list[OrderGroup]:
    """Group sessions showing the same feature matrix.

    Lists are matched on exact equality. Repeated observations of one order
    of one list are merged into their mean score. Groups come out in order of
    first appearance.
    """
    grouped: dict[ItemList, dict[Permutation, list[float]]] = {}
    for session in data:
        grouped.setdefault(session.items, {}).setdefault(session.shown_order, []).append(session.score)
    return [
        OrderGroup(items, tuple((perm, float(np.mean(scores))) for perm, scores in orders.items()))
        for items, orders in grouped.items()
    ]


def split(data: Dataset, cfg: SplitConfig) -> list[tuple[Dataset, Dataset]]:
    """``num_repeats`` independent shuffled train/test splits."""
    total = len(data)
    if total < 2:
        raise ValueError("splitting needs at least two sessions")
    n_train = int(round(cfg.train_fraction * total))
    if n_train == 0 or n_train == total:
        raise ValueError(f"train_fraction={cfg.train_fraction} leaves one side empty for {total} sessions")
    rng = np.random.default_rng(cfg.seed)
    splits = []
    for _ in range(cfg.num_repeats):
        shuffled = rng.permutation(total)
        splits.append((data.subset(np.sort(shuffled[:n_train])), data.subset(np.sort(shuffled[n_train:]))))
    return splits


def _evaluate_split(
    train: Dataset, test: Dataset, gd: GDConfig, altmin: AltMinConfig, lam: float, gain: Gain
) -> list[EvalRow]:
    models = {
        "listmle": train_pl(train.with_orders((s.shown_order for s in train), score=1.0), gd, weighted=False),
        "weighted_listmle": train_pl(train, gd, weighted=True),
        "payoff_gain": train_alternating(train, lam, altmin),
    }
    return evaluate_groups(models, group_sessions(test), gain)


def run_split_protocol(
    data: Dataset,
    split_cfg: SplitConfig,
    gd: GDConfig,
    altmin: AltMinConfig,
    lam: float,
    gain: Gain = "linear",
    workers: int = 1,
) -> list[EvalRow]:
    """Train the three approaches on each split, evaluate on its test side, average over splits.

    ListMLE learns to reproduce the shown orders (unit weights), since no
    better reference order exists for logged data.
    """
    splits = split(data, split_cfg)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        reports = list(pool.map(lambda pair: _evaluate_split(*pair, gd, altmin, lam, gain), splits))

    averaged = []
    for rows in zip(*reports, strict=True):
        averaged.append(
            EvalRow(
                model_name=rows[0].model_name,
                avg_ndcg=float(np.mean([r.avg_ndcg for r in rows])),
                top1_avg_score=float(np.mean([r.top1_avg_score for r in rows])),
                num_groups=sum(r.num_groups for r in rows),
                num_skipped=sum(r.num_skipped for r in rows),
            )
        )
    return averaged
