"""Lists, permutations, sessions and datasets.

Permutations follow the "position of item i" convention: ``positions[i]`` is
the 1-based display position of item ``i``. The inverse reading ("item shown
at position j") is available as :attr:`Permutation.order` and through
:func:`invert`; nothing else converts between the two.
"""

from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from itertools import permutations

import numpy as np

from order_ltr.errors import DimensionMismatchError, InvalidPermutationError


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float, copy=True)
    array.flags.writeable = False
    return array


@dataclass(frozen=True)
class ItemList:
    """A list of ``n`` items as a d×n feature matrix, one column per item."""

    features: np.ndarray = field(repr=False)

    def __post_init__(self):
        features = np.asarray(self.features, dtype=float)
        if features.ndim != 2:
            raise DimensionMismatchError(f"features must be a d×n matrix, got shape {features.shape}")
        if features.shape[0] < 1 or features.shape[1] < 1:
            raise DimensionMismatchError(f"features must have d ≥ 1 and n ≥ 1, got shape {features.shape}")
        if not np.all(np.isfinite(features)):
            raise ValueError("features must be finite")
        object.__setattr__(self, "features", _frozen(features))

    @property
    def d(self) -> int:
        return self.features.shape[0]

    @property
    def n(self) -> int:
        return self.features.shape[1]

    def __eq__(self, other):
        if not isinstance(other, ItemList):
            return NotImplemented
        return np.array_equal(self.features, other.features)

    def __hash__(self):
        return hash((self.features.shape, self.features.tobytes()))


@dataclass(frozen=True)
class Permutation:
    positions: tuple[int, ...]

    def __post_init__(self):
        positions = tuple(int(p) for p in self.positions)
        if not positions:
            raise InvalidPermutationError("permutation must have at least one entry")
        if sorted(positions) != list(range(1, len(positions) + 1)):
            raise InvalidPermutationError(f"{list(positions)} is not a bijection onto 1..{len(positions)}")
        object.__setattr__(self, "positions", positions)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def from_order(cls, order: Sequence[int]) -> "Permutation":
        """Build from 0-based item indices listed in display order."""
        order = np.asarray(order, dtype=int)
        if order.ndim != 1 or not np.array_equal(np.sort(order), np.arange(order.size)):
            raise InvalidPermutationError(f"{order.tolist()} is not an order of 0..{order.size - 1}")
        positions = np.empty(order.size, dtype=int)
        positions[order] = np.arange(1, len(order) + 1)
        return cls(tuple(positions))

    @property
    def n(self) -> int:
        return len(self.positions)

    @cached_property
    def index(self) -> np.ndarray:
        """0-based display position of each item."""
        index = np.asarray(self.positions, dtype=int) - 1
        index.flags.writeable = False
        return index

    @cached_property
    def order(self) -> np.ndarray:
        """0-based index of the item shown at each position."""
        order = np.empty(self.n, dtype=int)
        order[self.index] = np.arange(self.n)
        order.flags.writeable = False
        return order

    def __len__(self) -> int:
        return self.n

    def __iter__(self) -> Iterator[int]:
        return iter(self.positions)


@dataclass(frozen=True)
class Session:
    """One list, the order it was shown in, and the observed score."""

    items: ItemList
    shown_order: Permutation
    score: float

    def __post_init__(self):
        if self.shown_order.n != self.items.n:
            raise DimensionMismatchError(
                f"order has length {self.shown_order.n} but the list has {self.items.n} items"
            )
        score = float(self.score)
        if not np.isfinite(score) or score < 0:
            raise ValueError(f"score must be finite and non-negative, got {self.score}")
        object.__setattr__(self, "score", score)


@dataclass(frozen=True)
class Dataset:
    sessions: tuple[Session, ...]

    def __post_init__(self):
        sessions = tuple(self.sessions)
        if not sessions:
            raise ValueError("a dataset needs at least one session")
        n, d = sessions[0].items.n, sessions[0].items.d
        for k, session in enumerate(sessions):
            if session.items.n != n or session.items.d != d:
                raise DimensionMismatchError(
                    f"session {k} has shape d={session.items.d}, n={session.items.n}; expected d={d}, n={n}"
                )
        object.__setattr__(self, "sessions", sessions)

    @property
    def n(self) -> int:
        return self.sessions[0].items.n

    @property
    def d(self) -> int:
        return self.sessions[0].items.d

    def __len__(self) -> int:
        return len(self.sessions)

    def __iter__(self) -> Iterator[Session]:
        return iter(self.sessions)

    @cached_property
    def scores(self) -> np.ndarray:
        return _frozen([s.score for s in self.sessions])

    @cached_property
    def displayed(self) -> np.ndarray:
        """N×d×n tensor; slice i is session i's feature matrix in display order."""
        return _frozen(np.stack([apply_permutation(s.items, s.shown_order).features for s in self.sessions]))

    def with_orders(self, orders: Iterable[Permutation], score: float | None = None) -> "Dataset":
        """Same lists with replaced orders, and optionally one constant score."""
        return Dataset(
            tuple(
                Session(s.items, order, s.score if score is None else score)
                for s, order in zip(self.sessions, orders, strict=True)
            )
        )

    def subset(self, indices: Iterable[int]) -> "Dataset":
        return Dataset(tuple(self.sessions[i] for i in indices))


def apply_permutation(items: ItemList, perm: Permutation) -> ItemList:
    """X_Π: column ``perm.positions[i]`` of the result is column ``i`` of ``items``."""
    if perm.n != items.n:
        raise DimensionMismatchError(f"permutation of length {perm.n} applied to {items.n} items")
    return ItemList(items.features[:, perm.order])


def invert(perm: Permutation) -> Permutation:
    return Permutation(tuple(perm.order + 1))


def sort_descending(values: Sequence[float] | np.ndarray) -> Permutation:
    """Positions that place larger values first; ties keep the smaller index first."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("sort_descending needs a non-empty vector")
    if not np.all(np.isfinite(values)):
        raise ValueError("sort_descending needs finite values")
    return Permutation.from_order(np.argsort(-values, kind="stable"))


def all_permutations(n: int) -> Iterator[Permutation]:
    """Every permutation of size n, lexicographic in ``positions``."""
    for positions in permutations(range(1, n + 1)):
        yield Permutation(positions)
