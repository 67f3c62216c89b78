"""Item-payoff / positional-gain model.

The predicted score of showing list X in order Π is Σ_j g_j · exp(vᵀ x_(j)),
where x_(j) is the item shown at position j. Training alternates a closed-form
ridge update of g with projected gradient descent on v inside the unit ball.
"""

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, PositiveFloat, PositiveInt

from order_ltr.assignment import solve_lsap_exact, solve_lsap_greedy
from order_ltr.core import Dataset, ItemList, Permutation, apply_permutation
from order_ltr.errors import DimensionMismatchError, DivergenceError, SingularSystemError
from order_ltr.plackett_luce import MAX_HALVINGS, TrainingHistory

logger = logging.getLogger(__name__)

NORM_SLACK = 1e-12


class AltMinConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    eps: PositiveFloat = 1e-10
    eta: PositiveFloat = 1e-2
    inner_tol: PositiveFloat = 1e-8
    max_outer: PositiveInt = 300
    max_inner: PositiveInt = 100


@dataclass(frozen=True)
class PayoffGainModel:
    v: np.ndarray
    g: np.ndarray
    lam: float = 1e-3
    history: TrainingHistory | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        v = np.array(self.v, dtype=float, copy=True)
        g = np.array(self.g, dtype=float, copy=True)
        if v.ndim != 1 or g.ndim != 1 or v.size == 0 or g.size == 0:
            raise DimensionMismatchError(f"v and g must be non-empty vectors, got {v.shape} and {g.shape}")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(g)) and np.isfinite(self.lam)):
            raise ValueError("payoff-gain parameters must be finite")
        if self.lam < 0:
            raise ValueError(f"lambda must be non-negative, got {self.lam}")
        if np.linalg.norm(v) > 1 + NORM_SLACK:
            raise ValueError(f"‖v‖₂ = {np.linalg.norm(v)} exceeds 1")
        v.flags.writeable = False
        g.flags.writeable = False
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def d(self) -> int:
        return self.v.size

    @property
    def n(self) -> int:
        return self.g.size

    def __eq__(self, other):
        if not isinstance(other, PayoffGainModel):
            return NotImplemented
        return np.array_equal(self.v, other.v) and np.array_equal(self.g, other.g) and self.lam == other.lam

    __hash__ = None


def _check_items(model: PayoffGainModel, items: ItemList) -> None:
    if items.d != model.d or items.n != model.n:
        raise DimensionMismatchError(
            f"model expects d={model.d}, n={model.n}; the list has d={items.d}, n={items.n}"
        )


def _check_data(data: Dataset, v: np.ndarray, g: np.ndarray | None = None) -> None:
    if v.shape != (data.d,):
        raise DimensionMismatchError(f"v has shape {v.shape}, data has d={data.d}")
    if g is not None and g.shape != (data.n,):
        raise DimensionMismatchError(f"g has shape {g.shape}, data has n={data.n}")


def project_unit_ball(v: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(v)
    if norm <= 1:
        return v
    return v / norm


def payoff_matrix(data: Dataset, v: np.ndarray) -> np.ndarray:
    """N×n design matrix; row i holds exp(vᵀ x) for session i's items in display order."""
    return np.exp(np.einsum("d,idj->ij", v, data.displayed))


def _fit(data: Dataset, v: np.ndarray, g: np.ndarray) -> float:
    residual = data.scores - payoff_matrix(data, v) @ g
    return float(residual @ residual)


def objective(data: Dataset, v: np.ndarray, g: np.ndarray, lam: float) -> float:
    """Σ_i (s_i − exp(vᵀX_Π) g)² + λ‖g‖₂²."""
    return _fit(data, v, g) + lam * float(g @ g)


def predict_score(model: PayoffGainModel, items: ItemList, perm: Permutation) -> float:
    _check_items(model, items)
    payoffs = np.exp(model.v @ apply_permutation(items, perm).features)
    return float(model.g @ payoffs)


def scoring_matrix(model: PayoffGainModel, items: ItemList) -> np.ndarray:
    """S[i, j] = g_j · exp(vᵀx_i), the score of item i placed at position j."""
    _check_items(model, items)
    return np.outer(np.exp(model.v @ items.features), model.g)


def g_update(data: Dataset, v: np.ndarray, lam: float) -> np.ndarray:
    """Ridge solution of (AᵀA + λI) g = Aᵀs."""
    v = np.asarray(v, dtype=float)
    _check_data(data, v)
    if lam < 0:
        raise ValueError(f"lambda must be non-negative, got {lam}")
    a = payoff_matrix(data, v)
    if lam == 0 and np.linalg.matrix_rank(a) < data.n:
        raise SingularSystemError(
            f"design matrix has rank {np.linalg.matrix_rank(a)} < n={data.n}; use lambda > 0"
        )
    gram = a.T @ a + lam * np.eye(data.n)
    try:
        return scipy.linalg.solve(gram, a.T @ data.scores, assume_a="pos")
    except np.linalg.LinAlgError as e:
        raise SingularSystemError(f"ridge normal equations are singular: {e}") from e


def v_gradient(data: Dataset, v: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Gradient of Σ_i (s_i − exp(vᵀX_Π) g)² with respect to v."""
    v = np.asarray(v, dtype=float)
    g = np.asarray(g, dtype=float)
    _check_data(data, v, g)
    a = payoff_matrix(data, v)
    e = a @ g - data.scores
    return 2.0 * np.einsum("i,ij,idj->d", e, a * g, data.displayed)


def v_update(data: Dataset, g: np.ndarray, cfg: AltMinConfig, v_init: np.ndarray) -> np.ndarray:
    """Projected gradient descent on v for fixed g.

    Each step tries η first and halves it until the data fit does not
    increase, so the returned v never fits worse than ``v_init``.
    """
    g = np.asarray(g, dtype=float)
    v = project_unit_ball(np.asarray(v_init, dtype=float))
    _check_data(data, v, g)
    fit = _fit(data, v, g)

    for k in range(cfg.max_inner):
        grad = v_gradient(data, v, g)
        step = cfg.eta
        for _ in range(MAX_HALVINGS):
            candidate = project_unit_ball(v - step * grad)
            candidate_fit = _fit(data, candidate, g)
            if np.isfinite(candidate_fit) and candidate_fit <= fit:
                break
            step /= 2
        else:
            logger.debug(f"v update: no decrease after {MAX_HALVINGS} halvings at inner step {k}")
            break
        if step < cfg.eta:
            logger.debug(f"v update: step halved to {step:.3g} at inner step {k}")
        moved = np.linalg.norm(candidate - v)
        v, fit = candidate, candidate_fit
        if moved <= cfg.inner_tol:
            break
    return v


def train_alternating(data: Dataset, lam: float, cfg: AltMinConfig) -> PayoffGainModel:
    """Alternating minimization of the ridge-regularized squared error.

    The tracked objective is fit + λ‖g‖₂², the quantity both half-steps
    decrease, so the recorded sequence never goes up.
    """
    v = np.ones(data.d) / np.sqrt(data.d)
    g = np.zeros(data.n)
    obj = float(data.scores @ data.scores)
    objectives = [obj]
    converged = False
    logger.info(f"Training payoff-gain model on {len(data)} sessions (n={data.n}, d={data.d}, lambda={lam})")

    k = 0
    for k in range(1, cfg.max_outer + 1):
        g_next = g_update(data, v, lam)
        v_next = v_update(data, g_next, cfg, v)
        obj_next = objective(data, v_next, g_next, lam)
        if not np.isfinite(obj_next):
            raise DivergenceError(f"alternating minimization objective is {obj_next} at iteration {k}")
        if obj_next > obj:
            # rounding in the ridge solve; keep the previous iterate
            logger.debug(f"objective rose by {obj_next - obj:.3g} at iteration {k}, stopping")
            converged = True
            break
        decrease = obj - obj_next
        v, g, obj = v_next, g_next, obj_next
        objectives.append(obj)
        logger.debug(f"alt-min iter {k}: objective={obj:.12g}")
        if decrease <= cfg.eps:
            converged = True
            break

    if converged:
        logger.info(f"Payoff-gain training converged after {k} iterations, objective {obj:.12g}")
    else:
        logger.warning(f"Payoff-gain training stopped at max_outer={cfg.max_outer} (objective {obj:.12g})")
    history = TrainingHistory(tuple(objectives), k, converged)
    return PayoffGainModel(v, g, lam, history=history)


def infer_order(model: PayoffGainModel, items: ItemList) -> Permutation:
    """Largest payoff to the largest gain, second to second, and so on.

    Payoff and gain ties are broken by index. Positions with equal gain form
    a block; the items sent to a block fill it in ascending item order.
    """
    _check_items(model, items)
    payoff_rank = np.argsort(-(model.v @ items.features), kind="stable")
    gain_rank = np.argsort(-model.g, kind="stable")
    index = np.empty(model.n, dtype=int)
    index[payoff_rank] = gain_rank

    for gain in np.unique(model.g):
        block = np.flatnonzero(model.g == gain)
        if block.size > 1:
            members = np.flatnonzero(np.isin(index, block))
            index[members] = block
    return Permutation(tuple(index + 1))


def infer_order_assignment(
    model: PayoffGainModel, items: ItemList, solver: Literal["exact", "greedy"] = "exact"
) -> Permutation:
    """Best order via a linear-sum-assignment solve on the scoring matrix."""
    matrix = scoring_matrix(model, items)
    if solver == "greedy":
        # a constant shift changes every order's total by the same amount
        return solve_lsap_greedy(matrix - min(matrix.min(), 0.0)).item_to_position
    return solve_lsap_exact(matrix).item_to_position
