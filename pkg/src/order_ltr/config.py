import json
from functools import lru_cache
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, ValidationError, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from order_ltr.errors import ConfigError
from order_ltr.evaluation import SplitConfig
from order_ltr.payoff_gain import AltMinConfig
from order_ltr.plackett_luce import GDConfig
from order_ltr.synthetic import DEFAULT_COV_SCALE


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=".env", env_prefix="ORDER_LTR_", extra="ignore")

    log_level: str = "INFO"
    seed: int = 0
    workers: int = 1

    # weighted / plain ListMLE
    step_size: float = 1.0
    max_iters: int = 2000
    tol: float = 1e-8

    # payoff-gain alternating minimization
    lam: float = 1e-3
    eta: float = 1e-2
    eps: float = 1e-10
    inner_tol: float = 1e-8
    max_outer: int = 300
    max_inner: int = 100

    def gd_config(self, **overrides) -> GDConfig:
        values = {"step_size": self.step_size, "max_iters": self.max_iters, "tol": self.tol}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return GDConfig(**values)

    def altmin_config(self, **overrides) -> AltMinConfig:
        values = {
            "eps": self.eps,
            "eta": self.eta,
            "inner_tol": self.inner_tol,
            "max_outer": self.max_outer,
            "max_inner": self.max_inner,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        return AltMinConfig(**values)

    def run_defaults(self) -> dict:
        """Settings-level values for the command configs; fields a config lacks are dropped by ``load_config``."""
        return {
            "seed": self.seed,
            "workers": self.workers,
            "lam": self.lam,
            "gd": self.gd_config().model_dump(),
            "altmin": self.altmin_config().model_dump(),
        }


@lru_cache
def get_settings() -> Settings:
    return Settings()


def _merge(base: dict, update: dict) -> dict:
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            value = _merge(merged[key], value)
        merged[key] = value
    return merged


def load_config[T: BaseModel](
    path: Path | str | None, model: type[T], defaults: dict | None = None, **overrides
) -> T:
    """Build ``model`` from layered values: ``defaults`` (usually settings), then the JSON file, then overrides.

    Non-None overrides win. Default keys that ``model`` has no field for are
    ignored; nested sections merge key by key.
    """
    values = {k: v for k, v in (defaults or {}).items() if k in model.model_fields}
    if path is not None:
        try:
            document = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid config {path}: {e}") from e
        if not isinstance(document, dict):
            raise ConfigError(f"invalid config {path}: expected a JSON object")
        values = _merge(values, document)
    values = _merge(values, {k: v for k, v in overrides.items() if v is not None})
    try:
        return model.model_validate(values)
    except ValidationError as e:
        raise ConfigError(f"invalid config {path}: {e}") from e


class GenerateConfig(BaseModel):
    """Inputs of ``order-ltr generate``.

    With ``orders_per_list`` set, each of the ``num_sessions`` lists is shown
    in that many distinct orders and scored as a dwell time.
    """

    model_config = ConfigDict(extra="forbid")

    n: PositiveInt = 5
    d: PositiveInt = 10
    num_sessions: PositiveInt = 1000
    gain_vector: list[float] | None = None
    seed: int = 0
    cov_scale: float = Field(default=DEFAULT_COV_SCALE, ge=0)
    orders_per_list: PositiveInt | None = None
    dwell_scale: PositiveFloat = 600.0
    noise: float = Field(default=0.1, ge=0)

    @model_validator(mode="after")
    def _gains_match_n(self):
        if self.gain_vector is not None:
            if len(self.gain_vector) != self.n:
                raise ValueError(f"gain_vector has length {len(self.gain_vector)}, expected n={self.n}")
            if any(x < 0 for x in self.gain_vector):
                raise ValueError("gain_vector must be non-negative")
        return self


class DwellBenchConfig(BaseModel):
    """Inputs of ``order-ltr dwell-benchmark``: dwell-time sessions evaluated over random splits."""

    model_config = ConfigDict(extra="forbid")

    n: PositiveInt = 3
    d: PositiveInt = 10
    num_lists: PositiveInt = 1500
    orders_per_list: PositiveInt = 3
    gain_vector: list[float] = Field(default_factory=lambda: [0.15, 0.6, 0.25])
    seed: int = 0
    cov_scale: float = Field(default=DEFAULT_COV_SCALE, ge=0)
    dwell_scale: PositiveFloat = 600.0
    noise: float = Field(default=0.1, ge=0)
    split: SplitConfig = Field(default_factory=SplitConfig)
    lam: float = Field(default=1e-3, ge=0)
    gd: GDConfig = Field(default_factory=GDConfig)
    altmin: AltMinConfig = Field(default_factory=AltMinConfig)
    ndcg_gain: Literal["linear", "exponential"] = "linear"
    workers: PositiveInt = 1

    @model_validator(mode="after")
    def _gains_match_n(self):
        if len(self.gain_vector) != self.n:
            raise ValueError(f"gain_vector has length {len(self.gain_vector)}, expected n={self.n}")
        if any(x < 0 for x in self.gain_vector):
            raise ValueError("gain_vector must be non-negative")
        return self
