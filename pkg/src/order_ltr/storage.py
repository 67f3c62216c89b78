"""Reading and writing sessions, lists, orders, models, ground truth, tables and manifests.

Positions are 1-based on disk and feature matrices are stored item-major;
conversion to the in-memory d×n layout happens only here.
"""

import csv
import logging
from collections.abc import Iterable, Iterator, Sequence
from pathlib import Path

import numpy as np
from pydantic import BaseModel, TypeAdapter, ValidationError

from order_ltr.core import Dataset, ItemList, Permutation, Session
from order_ltr.errors import DataError
from order_ltr.models import (
    GroundTruthFile,
    ListRecord,
    ModelFile,
    OrderRecord,
    PayoffGainModelFile,
    PLModelFile,
    RunManifest,
    SessionRecord,
)
from order_ltr.payoff_gain import PayoffGainModel
from order_ltr.plackett_luce import PLModel
from order_ltr.synthetic import GroundTruth

logger = logging.getLogger(__name__)

type Model = PLModel | PayoffGainModel

_model_adapter = TypeAdapter(ModelFile)


def _lines(path: Path) -> Iterator[tuple[int, str]]:
    try:
        with path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if line.strip():
                    yield lineno, line
    except OSError as e:
        raise DataError(f"cannot read: {e}", path) from e


def _parse[T: BaseModel](record: type[T], path: Path, lineno: int, line: str) -> T:
    try:
        return record.model_validate_json(line)
    except ValidationError as e:
        errors = "; ".join(f"{'.'.join(map(str, err['loc'])) or 'record'}: {err['msg']}" for err in e.errors())
        raise DataError(errors, path, lineno) from e


def _items(features: list[list[float]]) -> ItemList:
    return ItemList(np.asarray(features, dtype=float).T)


def _features(items: ItemList) -> list[list[float]]:
    return items.features.T.tolist()


def _check_shape(items: ItemList, shape: tuple[int, int] | None, path: Path, lineno: int) -> tuple[int, int]:
    if shape is not None and (items.d, items.n) != shape:
        raise DataError(
            f"list has n={items.n} items with d={items.d} features; earlier records have n={shape[1]}, d={shape[0]}",
            path,
            lineno,
        )
    return items.d, items.n


def load_sessions(path: Path | str) -> Dataset:
    path = Path(path)
    sessions = []
    shape = None
    for lineno, line in _lines(path):
        record = _parse(SessionRecord, path, lineno, line)
        items = _items(record.features)
        shape = _check_shape(items, shape, path, lineno)
        sessions.append(Session(items, Permutation(tuple(record.order)), record.score))
    if not sessions:
        raise DataError("no session records", path)
    logger.info(f"Loaded {len(sessions)} sessions from {path}")
    return Dataset(tuple(sessions))


def write_sessions(path: Path | str, data: Dataset) -> None:
    records = (
        SessionRecord(features=_features(s.items), order=list(s.shown_order.positions), score=s.score)
        for s in data
    )
    _write_lines(Path(path), records)


def load_lists(path: Path | str) -> list[ItemList]:
    path = Path(path)
    lists = []
    shape = None
    for lineno, line in _lines(path):
        items = _items(_parse(ListRecord, path, lineno, line).features)
        shape = _check_shape(items, shape, path, lineno)
        lists.append(items)
    if not lists:
        raise DataError("no list records", path)
    return lists


def write_lists(path: Path | str, lists: Iterable[ItemList]) -> None:
    _write_lines(Path(path), (ListRecord(features=_features(items)) for items in lists))


def load_orders(path: Path | str) -> list[Permutation]:
    path = Path(path)
    return [Permutation(tuple(_parse(OrderRecord, path, lineno, line).order)) for lineno, line in _lines(path)]


def write_orders(path: Path | str, orders: Iterable[Permutation]) -> None:
    _write_lines(Path(path), (OrderRecord(order=list(perm.positions)) for perm in orders))


def _write_lines(path: Path, records: Iterable[BaseModel]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(record.model_dump_json(by_alias=True))
            fh.write("\n")


def _write_document(path: Path, document: BaseModel) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(document.model_dump_json(by_alias=True, indent=2) + "\n", encoding="utf-8")


def save_model(path: Path | str, model: Model) -> None:
    match model:
        case PLModel():
            document = PLModelFile(u=model.u.tolist())
        case PayoffGainModel():
            document = PayoffGainModelFile(v=model.v.tolist(), g=model.g.tolist(), lam=model.lam)
        case _:
            raise TypeError(f"cannot serialize {type(model).__name__}")
    _write_document(Path(path), document)


def load_model(path: Path | str) -> Model:
    path = Path(path)
    try:
        document = _model_adapter.validate_json(path.read_bytes())
    except OSError as e:
        raise DataError(f"cannot read model: {e}", path) from e
    except ValidationError as e:
        raise DataError(f"invalid model file: {e}", path) from e
    try:
        match document:
            case PLModelFile():
                return PLModel(np.asarray(document.u))
            case PayoffGainModelFile():
                return PayoffGainModel(np.asarray(document.v), np.asarray(document.g), document.lam)
    except ValueError as e:
        raise DataError(f"invalid model parameters: {e}", path) from e


def save_ground_truth(path: Path | str, gt: GroundTruth) -> None:
    document = GroundTruthFile(
        mus=gt.mus.T.tolist(), v_star=gt.v_star.tolist(), g_star=gt.g_star.tolist(), cov_scale=gt.cov_scale
    )
    _write_document(Path(path), document)


def load_ground_truth(path: Path | str) -> GroundTruth:
    path = Path(path)
    try:
        document = GroundTruthFile.model_validate_json(path.read_bytes())
        return GroundTruth(np.asarray(document.mus).T, document.v_star, document.g_star, document.cov_scale)
    except OSError as e:
        raise DataError(f"cannot read ground truth: {e}", path) from e
    except (ValidationError, ValueError) as e:
        raise DataError(f"invalid ground truth: {e}", path) from e


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return " ".join(_cell(v) for v in value)
    return str(value)


def write_table(path: Path | str, rows: Sequence[BaseModel], columns: Sequence[str] | None = None) -> None:
    """CSV with one header row; floats in shortest round-trip form, lists space-separated."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if columns is None:
        columns = list(type(rows[0]).model_fields) if rows else []
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(getattr(row, column)) for column in columns])


def read_table(path: Path | str) -> list[dict[str, str]]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def manifest_path(output: Path | str) -> Path:
    output = Path(output)
    return output.with_name(output.name + ".manifest.json")


def write_manifest(output: Path | str, manifest: RunManifest) -> Path:
    path = manifest_path(output)
    _write_document(path, manifest)
    logger.info(f"Wrote manifest {path}")
    return path
