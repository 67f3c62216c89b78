import numpy as np
import pytest

from order_ltr.config import get_settings
from order_ltr.core import Dataset, ItemList, Permutation, Session
from order_ltr.payoff_gain import PayoffGainModel, predict_score
from order_ltr.synthetic import generate_dataset, make_ground_truth


@pytest.fixture(autouse=True)
def _fresh_settings(monkeypatch):
    for var in ("ORDER_LTR_LOG_LEVEL", "ORDER_LTR_SEED", "ORDER_LTR_LAM", "ORDER_LTR_ETA", "ORDER_LTR_WORKERS"):
        monkeypatch.delenv(var, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def make_items(rng):
    def make(d: int, n: int, scale: float = 1.0) -> ItemList:
        return ItemList(scale * rng.standard_normal((d, n)))

    return make


@pytest.fixture
def truth():
    return make_ground_truth(n=4, d=3, seed=7, g_star=[0.4, 0.3, 0.2, 0.1])


@pytest.fixture
def sessions(truth):
    return generate_dataset(truth, 60, seed=11)


@pytest.fixture
def planted(rng):
    """Factory for a payoff-gain model and sessions scored exactly by it."""

    def make(n: int = 3, d: int = 4, num_sessions: int = 200, feature_scale: float = 0.5):
        v = rng.standard_normal(d)
        v *= 0.8 / np.linalg.norm(v)
        g = np.sort(rng.uniform(0.5, 3.0, size=n))[::-1].copy()
        model = PayoffGainModel(v, g)
        rows = []
        for _ in range(num_sessions):
            items = ItemList(feature_scale * rng.standard_normal((d, n)))
            perm = Permutation.from_order(rng.permutation(n))
            rows.append(Session(items, perm, predict_score(model, items, perm)))
        return model, Dataset(tuple(rows))

    return make
