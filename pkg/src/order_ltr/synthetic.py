"""Synthetic ground truth and the mean-score benchmark.

Items are Gaussian around fixed per-slot means, lists are shown in uniformly
random orders, and the score of an order is the gain-weighted softmax of the
item payoffs in display order. Because of the softmax normalization this is
not itself a payoff-gain model.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PositiveInt, model_validator
from scipy.special import softmax

from order_ltr.assignment import BRUTE_FORCE_MAX_N
from order_ltr.core import Dataset, ItemList, Permutation, Session, all_permutations, sort_descending
from order_ltr.errors import DimensionMismatchError
from order_ltr.models import BenchmarkRow
from order_ltr.payoff_gain import AltMinConfig, infer_order, train_alternating
from order_ltr.plackett_luce import GDConfig, infer_pl, train_pl

logger = logging.getLogger(__name__)

DEFAULT_COV_SCALE = 0.1

REFERENCE_GAIN_VECTORS = (
    (0.2, 0.2, 0.2, 0.2, 0.2),
    (0.00493, 0.00493, 0.493, 0.493, 0.00493),
    (0.1667, 0.04167, 0.25, 0.4167, 0.1250),
)

type SeedLike = int | np.random.Generator | np.random.SeedSequence | None


@dataclass(frozen=True)
class GroundTruth:
    mus: np.ndarray = field(repr=False)
    v_star: np.ndarray
    g_star: np.ndarray
    cov_scale: float = DEFAULT_COV_SCALE

    def __post_init__(self):
        mus = np.array(self.mus, dtype=float, copy=True)
        v_star = np.array(self.v_star, dtype=float, copy=True)
        g_star = np.array(self.g_star, dtype=float, copy=True)
        if mus.ndim != 2 or v_star.shape != (mus.shape[0],) or g_star.shape != (mus.shape[1],):
            raise DimensionMismatchError(
                f"mus {mus.shape}, v_star {v_star.shape} and g_star {g_star.shape} do not agree"
            )
        if not all(np.all(np.isfinite(a)) for a in (mus, v_star, g_star)) or not np.isfinite(self.cov_scale):
            raise ValueError("ground truth must be finite")
        if np.any(g_star < 0):
            raise ValueError("gains must be non-negative")
        if self.cov_scale < 0:
            raise ValueError(f"cov_scale must be non-negative, got {self.cov_scale}")
        for name, array in (("mus", mus), ("v_star", v_star), ("g_star", g_star)):
            array.flags.writeable = False
            object.__setattr__(self, name, array)
        object.__setattr__(self, "cov_scale", float(self.cov_scale))

    @property
    def d(self) -> int:
        return self.mus.shape[0]

    @property
    def n(self) -> int:
        return self.mus.shape[1]

    def with_gains(self, g_star) -> "GroundTruth":
        return GroundTruth(self.mus, self.v_star, g_star, self.cov_scale)


def make_ground_truth(
    n: int, d: int, seed: SeedLike, g_star=None, cov_scale: float = DEFAULT_COV_SCALE
) -> GroundTruth:
    """Item means and v* with i.i.d. Uniform[0, 1] components; gains default to uniform."""
    if n < 1 or d < 1:
        raise ValueError(f"need n ≥ 1 and d ≥ 1, got n={n}, d={d}")
    rng = np.random.default_rng(seed)
    mus = rng.uniform(0.0, 1.0, size=(d, n))
    v_star = rng.uniform(0.0, 1.0, size=d)
    if g_star is None:
        g_star = np.full(n, 1.0 / n)
    return GroundTruth(mus, v_star, g_star, cov_scale)


def sample_list(gt: GroundTruth, seed: SeedLike) -> ItemList:
    """Column i ~ N(μ_i, cov_scale · I_d)."""
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(size=gt.mus.shape)
    return ItemList(gt.mus + np.sqrt(gt.cov_scale) * noise)


def _check(gt: GroundTruth, items: ItemList) -> None:
    if items.d != gt.d or items.n != gt.n:
        raise DimensionMismatchError(f"ground truth has d={gt.d}, n={gt.n}; list has d={items.d}, n={items.n}")


def true_score(gt: GroundTruth, items: ItemList, perm: Permutation) -> float:
    """g*ᵀ softmax(X_Πᵀ v*).

    Evaluated item-wise as Σ_i g*[π_i] · softmax(Xᵀv*)_i, which is the same
    sum; the softmax then does not depend on Π, so constant gains give the
    same float for every order.
    """
    _check(gt, items)
    if perm.n != items.n:
        raise DimensionMismatchError(f"order of length {perm.n} for {items.n} items")
    weights = softmax(gt.v_star @ items.features)
    return float(gt.g_star[perm.index] @ weights)


def relevance_order(gt: GroundTruth, items: ItemList) -> Permutation:
    _check(gt, items)
    return sort_descending(gt.v_star @ items.features)


def oracle_order(gt: GroundTruth, items: ItemList) -> Permutation:
    """Best order under :func:`true_score` by enumeration; first in lexicographic order on ties."""
    _check(gt, items)
    if gt.n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"enumeration is limited to n ≤ {BRUTE_FORCE_MAX_N}")
    return max(all_permutations(gt.n), key=lambda perm: true_score(gt, items, perm))


def generate_dataset(gt: GroundTruth, N: int, seed: SeedLike) -> Dataset:
    """N random lists, each shown in a uniformly random order (Fisher-Yates)."""
    if N < 1:
        raise ValueError(f"N must be at least 1, got {N}")
    rng = np.random.default_rng(seed)
    sessions = []
    for _ in range(N):
        items = sample_list(gt, rng)
        perm = Permutation.from_order(rng.permutation(gt.n))
        sessions.append(Session(items, perm, true_score(gt, items, perm)))
    return Dataset(tuple(sessions))


def generate_dwell_sessions(
    gt: GroundTruth,
    num_lists: int,
    orders_per_list: int,
    seed: SeedLike,
    dwell_scale: float = 600.0,
    noise: float = 0.1,
) -> Dataset:
    """Lists shown in several distinct random orders with dwell-time-like scores.

    Each observation is dwell_scale · true_score · LogNormal(0, noise).
    """
    if num_lists < 1 or orders_per_list < 1:
        raise ValueError("need at least one list and one order per list")
    rng = np.random.default_rng(seed)
    k = min(orders_per_list, math.factorial(gt.n))
    sessions = []
    for _ in range(num_lists):
        items = sample_list(gt, rng)
        seen: set[Permutation] = set()
        while len(seen) < k:
            perm = Permutation.from_order(rng.permutation(gt.n))
            if perm in seen:
                continue
            seen.add(perm)
            dwell = dwell_scale * true_score(gt, items, perm) * rng.lognormal(0.0, noise)
            sessions.append(Session(items, perm, dwell))
    return Dataset(tuple(sessions))


class BenchConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: PositiveInt = 5
    d: PositiveInt = 10
    n_train: PositiveInt = 1000
    n_test: PositiveInt = 500
    gain_vectors: list[list[float]] = Field(default_factory=lambda: [list(g) for g in REFERENCE_GAIN_VECTORS])
    seed: int = 0
    cov_scale: float = Field(default=DEFAULT_COV_SCALE, ge=0)
    lam: float = Field(default=1e-3, ge=0)
    gd: GDConfig = Field(default_factory=GDConfig)
    altmin: AltMinConfig = Field(default_factory=AltMinConfig)
    workers: PositiveInt = 1

    @model_validator(mode="after")
    def _gains_match_n(self):
        for g in self.gain_vectors:
            if len(g) != self.n:
                raise ValueError(f"gain vector {g} has length {len(g)}, expected n={self.n}")
            if any(x < 0 for x in g):
                raise ValueError(f"gain vector {g} has negative entries")
        if not self.gain_vectors:
            raise ValueError("at least one gain vector is required")
        return self


def _benchmark_row(
    cfg: BenchConfig, base: GroundTruth, gains: list[float], stream: np.random.SeedSequence
) -> BenchmarkRow:
    gt = base.with_gains(gains)
    train_stream, test_stream = stream.spawn(2)
    train = generate_dataset(gt, cfg.n_train, train_stream)

    relevance = train.with_orders((relevance_order(gt, s.items) for s in train), score=1.0)
    listmle = train_pl(relevance, cfg.gd, weighted=False)
    weighted = train_pl(train, cfg.gd, weighted=True)
    payoff_gain = train_alternating(train, cfg.lam, cfg.altmin)

    rng = np.random.default_rng(test_stream)
    totals = np.zeros(3)
    for _ in range(cfg.n_test):
        items = sample_list(gt, rng)
        totals += (
            true_score(gt, items, infer_pl(listmle, items)),
            true_score(gt, items, infer_pl(weighted, items)),
            true_score(gt, items, infer_order(payoff_gain, items)),
        )
    means = totals / cfg.n_test
    logger.info(f"gains={gains}: listmle={means[0]:.6f} weighted={means[1]:.6f} payoff_gain={means[2]:.6f}")
    return BenchmarkRow(
        gain_vector=list(gains),
        listmle_mean=float(means[0]),
        weighted_listmle_mean=float(means[1]),
        payoff_gain_mean=float(means[2]),
        seed=cfg.seed,
    )


def run_benchmark(cfg: BenchConfig) -> list[BenchmarkRow]:
    """Mean true score of each approach's inferred order on fresh test lists, per gain vector.

    The item means and v* are drawn once and shared by every row; each row
    trains and tests on its own child seed stream, so rows can run in any
    order or concurrently with identical results.
    """
    root = np.random.SeedSequence(cfg.seed)
    truth_stream, *row_streams = root.spawn(1 + len(cfg.gain_vectors))
    base = make_ground_truth(cfg.n, cfg.d, truth_stream, cov_scale=cfg.cov_scale)
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        rows = pool.map(
            lambda job: _benchmark_row(cfg, base, *job),
            zip(cfg.gain_vectors, row_streams, strict=True),
        )
        return list(rows)
