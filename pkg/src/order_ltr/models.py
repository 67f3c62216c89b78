"""Wire formats: records in sessions/lists/orders files, model files, manifests and result rows."""

import math
from typing import Annotated, Any, Literal

from pydantic import BaseModel, ConfigDict, Field, NonNegativeFloat, field_validator, model_validator


class _Record(BaseModel):
    model_config = ConfigDict(extra="forbid")


def _check_order(order: list[int]) -> list[int]:
    if sorted(order) != list(range(1, len(order) + 1)):
        raise ValueError(f"order {order} is not a bijection onto 1..{len(order)}")
    return order


def _check_features(features: list[list[float]]) -> list[list[float]]:
    d = len(features[0])
    if d == 0:
        raise ValueError("feature vectors must be non-empty")
    for i, row in enumerate(features):
        if len(row) != d:
            raise ValueError(f"item {i + 1} has {len(row)} features, item 1 has {d}")
        if not all(math.isfinite(x) for x in row):
            raise ValueError(f"item {i + 1} has non-finite features")
    return features


class ListRecord(BaseModel):
    """A list of items, item-major: ``features[i]`` is item i's feature vector.

    Extra keys are ignored so a sessions file can be used as a lists file.
    """

    model_config = ConfigDict(extra="ignore")

    features: list[list[float]] = Field(min_length=1)

    @field_validator("features")
    @classmethod
    def _rectangular_and_finite(cls, features: list[list[float]]) -> list[list[float]]:
        return _check_features(features)


class SessionRecord(_Record):
    features: list[list[float]] = Field(min_length=1)
    order: list[int]
    score: NonNegativeFloat

    @field_validator("features")
    @classmethod
    def _rectangular_and_finite(cls, features: list[list[float]]) -> list[list[float]]:
        return _check_features(features)

    @field_validator("order")
    @classmethod
    def _bijection(cls, order: list[int]) -> list[int]:
        return _check_order(order)

    @field_validator("score")
    @classmethod
    def _finite(cls, score: float) -> float:
        if not math.isfinite(score):
            raise ValueError("score must be finite")
        return score

    @model_validator(mode="after")
    def _lengths_agree(self):
        if len(self.order) != len(self.features):
            raise ValueError(f"order has {len(self.order)} entries for {len(self.features)} items")
        return self


class OrderRecord(_Record):
    order: list[int]

    @field_validator("order")
    @classmethod
    def _bijection(cls, order: list[int]) -> list[int]:
        return _check_order(order)


class PLModelFile(_Record):
    kind: Literal["pl"] = "pl"
    u: list[float]


class PayoffGainModelFile(_Record):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    kind: Literal["payoff_gain"] = "payoff_gain"
    v: list[float]
    g: list[float]
    lam: NonNegativeFloat = Field(alias="lambda")


ModelFile = Annotated[PLModelFile | PayoffGainModelFile, Field(discriminator="kind")]


class GroundTruthFile(_Record):
    mus: list[list[float]]  # item-major, like SessionRecord.features
    v_star: list[float]
    g_star: list[float]
    cov_scale: NonNegativeFloat


class RunManifest(_Record):
    command: str
    argv: list[str]
    seed: int | None = None
    config: dict[str, Any] = Field(default_factory=dict)
    inputs: dict[str, str] = Field(default_factory=dict)
    outputs: dict[str, str] = Field(default_factory=dict)
    duration_seconds: float
    exit_code: int = 0
    warnings: list[str] = Field(default_factory=list)


class BenchmarkRow(_Record):
    gain_vector: list[float]
    listmle_mean: float
    weighted_listmle_mean: float
    payoff_gain_mean: float
    seed: int


class EvalRow(_Record):
    model_name: str
    avg_ndcg: float
    top1_avg_score: float
    num_groups: int
    num_skipped: int
