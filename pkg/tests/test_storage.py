import json

import numpy as np
import pytest

from order_ltr.core import ItemList, Permutation
from order_ltr.errors import DataError
from order_ltr.models import BenchmarkRow, EvalRow, RunManifest
from order_ltr.payoff_gain import PayoffGainModel
from order_ltr.plackett_luce import PLModel
from order_ltr.storage import (
    load_ground_truth,
    load_lists,
    load_model,
    load_orders,
    load_sessions,
    manifest_path,
    read_table,
    save_ground_truth,
    save_model,
    write_lists,
    write_manifest,
    write_orders,
    write_sessions,
    write_table,
)


def _record(features, order, score=1.0) -> str:
    return json.dumps({"features": features, "order": order, "score": score})


class TestSessions:
    def test_write_then_load(self, tmp_path, sessions):
        path = tmp_path / "sessions.jsonl"
        write_sessions(path, sessions)
        assert load_sessions(path) == sessions
        assert len(path.read_text().splitlines()) == len(sessions)

    def test_records_are_item_major(self, tmp_path):
        path = tmp_path / "one.jsonl"
        path.write_text(_record([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]], [2, 1], 0.5) + "\n")
        (session,) = load_sessions(path)
        np.testing.assert_array_equal(session.items.features, [[1.0, 4.0], [2.0, 5.0], [3.0, 6.0]])
        assert session.shown_order == Permutation((2, 1))

    @pytest.mark.parametrize(
        "bad",
        [
            "not json",
            _record([[1.0], [2.0]], [1, 1]),
            _record([[1.0], [2.0]], [1, 2], -3.0),
            _record([[1.0], [2.0]], [1, 2, 3]),
            _record([[1.0, 2.0], [2.0]], [1, 2]),
            json.dumps({"features": [[1.0], [2.0]], "order": [1, 2]}),
        ],
    )
    def test_reports_the_offending_line(self, tmp_path, bad):
        path = tmp_path / "bad.jsonl"
        path.write_text(_record([[1.0], [2.0]], [1, 2]) + "\n" + bad + "\n")
        with pytest.raises(DataError) as info:
            load_sessions(path)
        assert info.value.line == 2
        assert f"{path}:2:" in str(info.value)

    def test_rejects_inconsistent_shapes(self, tmp_path):
        path = tmp_path / "mixed.jsonl"
        path.write_text(_record([[1.0], [2.0]], [1, 2]) + "\n" + _record([[1.0], [2.0], [3.0]], [1, 2, 3]) + "\n")
        with pytest.raises(DataError, match="earlier records"):
            load_sessions(path)

    def test_rejects_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("\n")
        with pytest.raises(DataError):
            load_sessions(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_sessions(tmp_path / "nope.jsonl")


class TestListsAndOrders:
    def test_sessions_file_reads_as_lists(self, tmp_path, sessions):
        path = tmp_path / "sessions.jsonl"
        write_sessions(path, sessions)
        assert load_lists(path) == [s.items for s in sessions]

    def test_lists_round_trip(self, tmp_path, make_items):
        lists = [make_items(3, 2) for _ in range(4)]
        write_lists(tmp_path / "lists.jsonl", lists)
        assert load_lists(tmp_path / "lists.jsonl") == lists

    def test_orders_are_one_based(self, tmp_path):
        path = tmp_path / "orders.jsonl"
        write_orders(path, [Permutation((2, 3, 1)), Permutation((1,))])
        assert path.read_text() == '{"order":[2,3,1]}\n{"order":[1]}\n'
        assert load_orders(path) == [Permutation((2, 3, 1)), Permutation((1,))]


class TestModels:
    def test_pl_model(self, tmp_path):
        model = PLModel(np.array([0.1, -2.5, 1e-17]))
        save_model(tmp_path / "pl.json", model)
        assert json.loads((tmp_path / "pl.json").read_text())["kind"] == "pl"
        assert load_model(tmp_path / "pl.json") == model

    def test_payoff_gain_model(self, tmp_path):
        model = PayoffGainModel(np.array([0.6, -0.8]), np.array([1.0 / 3.0, 2.0, 0.0]), lam=1e-3)
        save_model(tmp_path / "pg.json", model)
        document = json.loads((tmp_path / "pg.json").read_text())
        assert document["kind"] == "payoff_gain"
        assert document["lambda"] == 1e-3
        assert load_model(tmp_path / "pg.json") == model

    @pytest.mark.parametrize(
        "document",
        [
            {"kind": "svm", "w": [1.0]},
            {"kind": "pl"},
            {"kind": "payoff_gain", "v": [3.0, 4.0], "g": [1.0], "lambda": 0.1},
            {"kind": "payoff_gain", "v": [0.1], "g": [1.0], "lambda": -1.0},
        ],
    )
    def test_rejects_invalid_files(self, tmp_path, document):
        path = tmp_path / "model.json"
        path.write_text(json.dumps(document))
        with pytest.raises(DataError):
            load_model(path)


def test_ground_truth_round_trip(tmp_path, truth):
    save_ground_truth(tmp_path / "truth.json", truth)
    loaded = load_ground_truth(tmp_path / "truth.json")
    np.testing.assert_array_equal(loaded.mus, truth.mus)
    np.testing.assert_array_equal(loaded.v_star, truth.v_star)
    np.testing.assert_array_equal(loaded.g_star, truth.g_star)
    assert loaded.cov_scale == truth.cov_scale


class TestTables:
    def test_header_and_full_precision(self, tmp_path):
        rows = [BenchmarkRow(gain_vector=[0.2, 0.8], listmle_mean=0.1, weighted_listmle_mean=1 / 3, payoff_gain_mean=2.0, seed=7)]
        write_table(tmp_path / "table.csv", rows)
        header, line = (tmp_path / "table.csv").read_text().splitlines()
        assert header == "gain_vector,listmle_mean,weighted_listmle_mean,payoff_gain_mean,seed"
        assert line == f"0.2 0.8,0.1,{1 / 3!r},2.0,7"

    def test_read_back(self, tmp_path):
        rows = [EvalRow(model_name="pg", avg_ndcg=0.75, top1_avg_score=12.5, num_groups=3, num_skipped=1)]
        write_table(tmp_path / "report.csv", rows)
        (row,) = read_table(tmp_path / "report.csv")
        assert set(row) == {"model_name", "avg_ndcg", "top1_avg_score", "num_groups", "num_skipped"}
        assert float(row["avg_ndcg"]) == 0.75


def test_manifest_sits_next_to_its_output(tmp_path):
    out = tmp_path / "model.json"
    manifest = RunManifest(command="train", argv=["train", "x"], duration_seconds=0.5, exit_code=2)
    path = write_manifest(out, manifest)
    assert path == manifest_path(out) == tmp_path / "model.json.manifest.json"
    assert RunManifest.model_validate_json(path.read_text()) == manifest
