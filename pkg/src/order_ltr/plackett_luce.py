"""Plackett-Luce likelihoods and (weighted) ListMLE with a linear scorer.

The probability of an order is the product, over display positions, of the
softmax of the item shown there against every item shown at or after it.
Item scores are ``uᵀx``.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, ConfigDict, PositiveFloat, PositiveInt

from order_ltr.core import Dataset, ItemList, Permutation, apply_permutation, sort_descending
from order_ltr.errors import DimensionMismatchError, DivergenceError

logger = logging.getLogger(__name__)

# Backtracking gives up once the trial step shrinks by this many halvings.
MAX_HALVINGS = 60


class GDConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    step_size: PositiveFloat = 1.0
    max_iters: PositiveInt = 2000
    tol: PositiveFloat = 1e-8


@dataclass(frozen=True)
class TrainingHistory:
    """Objective after every accepted iterate, starting with the initial point."""

    objectives: tuple[float, ...]
    iterations: int
    converged: bool
    stalled: bool = False


@dataclass(frozen=True)
class PLModel:
    u: np.ndarray
    history: TrainingHistory | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        u = np.array(self.u, dtype=float, copy=True)
        if u.ndim != 1 or u.size == 0:
            raise DimensionMismatchError(f"u must be a non-empty vector, got shape {u.shape}")
        if not np.all(np.isfinite(u)):
            raise ValueError("u must be finite")
        u.flags.writeable = False
        object.__setattr__(self, "u", u)

    @property
    def d(self) -> int:
        return self.u.size

    def __eq__(self, other):
        if not isinstance(other, PLModel):
            return NotImplemented
        return np.array_equal(self.u, other.u)

    __hash__ = None


def _check_dims(model: PLModel, d: int) -> None:
    if model.d != d:
        raise DimensionMismatchError(f"model has d={model.d} but the items have d={d}")


def _suffix_logsumexp(z: np.ndarray) -> np.ndarray:
    """log Σ_{k ≥ j} exp(z_k) along the last axis, max-subtracted via logaddexp."""
    return np.logaddexp.accumulate(z[..., ::-1], axis=-1)[..., ::-1]


def pl_log_prob(model: PLModel, items: ItemList, perm: Permutation) -> float:
    _check_dims(model, items.d)
    z = model.u @ apply_permutation(items, perm).features
    return float(np.sum(z - _suffix_logsumexp(z)))


def pl_log_probs(model: PLModel, data: Dataset) -> np.ndarray:
    """Per-session log-probability of the shown order."""
    _check_dims(model, data.d)
    z = np.einsum("d,idj->ij", model.u, data.displayed)
    return np.sum(z - _suffix_logsumexp(z), axis=1)


def _check_weights(data: Dataset, weights) -> np.ndarray:
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (len(data),):
        raise DimensionMismatchError(f"expected {len(data)} weights, got shape {weights.shape}")
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise ValueError("weights must be finite and non-negative")
    return weights


def listmle_loss(model: PLModel, data: Dataset, weights) -> float:
    """Σ_i −w_i · log P(Π_i | X_i); unit weights give plain ListMLE."""
    weights = _check_weights(data, weights)
    return float(-(weights @ pl_log_probs(model, data)))


def listmle_grad(model: PLModel, data: Dataset, weights) -> np.ndarray:
    weights = _check_weights(data, weights)
    _check_dims(model, data.d)
    y = data.displayed
    z = np.einsum("d,idj->ij", model.u, y)
    lse = _suffix_logsumexp(z)
    n = data.n
    # p[i, j, k]: softmax weight of position k in the choice made at position j (k ≥ j).
    upper = np.triu(np.ones((n, n), dtype=bool))
    p = np.exp(np.where(upper, z[:, None, :] - lse[:, :, None], -np.inf))
    coef = 1.0 - p.sum(axis=1)
    return -np.einsum("i,ik,idk->d", weights, coef, y)


def train_pl(data: Dataset, cfg: GDConfig, weighted: bool) -> PLModel:
    """Gradient descent from u = 0 with a halving line search.

    ``weighted`` uses the session scores as weights, otherwise all ones. The
    weights are divided by their maximum before optimizing; this only rescales
    the objective, so the minimizer is unchanged and the step-size schedule
    does not depend on the units of the score.
    """
    weights = data.scores if weighted else np.ones(len(data))
    peak = float(np.max(weights))
    if peak > 0:
        weights = weights / peak

    u = np.zeros(data.d)
    loss = listmle_loss(PLModel(u), data, weights)
    if not np.isfinite(loss):
        raise DivergenceError(f"initial ListMLE loss is {loss}")
    losses = [loss]
    converged = stalled = False
    kind = "weighted ListMLE" if weighted else "ListMLE"
    logger.info(f"Training {kind} on {len(data)} sessions (n={data.n}, d={data.d})")

    iteration = 0
    for iteration in range(1, cfg.max_iters + 1):
        grad = listmle_grad(PLModel(u), data, weights)
        if not np.all(np.isfinite(grad)):
            raise DivergenceError(f"non-finite gradient at iteration {iteration}")
        if not np.any(grad):
            converged = True
            break

        step = cfg.step_size
        for _ in range(MAX_HALVINGS):
            candidate = u - step * grad
            candidate_loss = listmle_loss(PLModel(candidate), data, weights)
            if np.isfinite(candidate_loss) and candidate_loss <= loss:
                break
            step /= 2
        else:
            logger.warning(f"{kind}: line search found no decrease at iteration {iteration}, stopping")
            stalled = True
            break

        decrease = loss - candidate_loss
        u, loss = candidate, candidate_loss
        losses.append(loss)
        logger.debug(f"{kind} iter {iteration}: loss={loss:.12g} step={step:.3g}")
        if decrease < cfg.tol:
            converged = True
            break

    if not converged and not stalled:
        logger.warning(f"{kind} stopped at max_iters={cfg.max_iters} (last loss {loss:.12g})")
    else:
        logger.info(f"{kind} finished after {iteration} iterations, loss {loss:.12g}")
    history = TrainingHistory(tuple(losses), iteration, converged or stalled, stalled)
    return PLModel(u, history=history)


def infer_pl(model: PLModel, items: ItemList) -> Permutation:
    """Most probable order: items sorted by descending score.

    exp is monotone, so sorting the raw scores uᵀx orders exactly as sorting
    exp(uᵀx) does, without overflow.
    """
    _check_dims(model, items.d)
    return sort_descending(model.u @ items.features)
