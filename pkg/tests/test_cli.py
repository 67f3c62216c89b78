import json

import numpy as np
import pytest

from order_ltr.cli import EX_DATAERR, EX_MAX_ITERATIONS, EX_OK, EX_USAGE, main
from order_ltr.core import Dataset, Permutation, Session, all_permutations
from order_ltr.models import RunManifest
from order_ltr.payoff_gain import AltMinConfig, PayoffGainModel, predict_score, train_alternating
from order_ltr.plackett_luce import PLModel, TrainingHistory
from order_ltr.storage import (
    load_model,
    load_orders,
    load_sessions,
    manifest_path,
    read_table,
    save_model,
    write_lists,
    write_sessions,
)


@pytest.fixture
def generated(tmp_path):
    config = tmp_path / "generate.json"
    config.write_text(json.dumps({"n": 4, "d": 3, "num_sessions": 80, "gain_vector": [0.4, 0.3, 0.2, 0.1]}))
    out = tmp_path / "sessions.jsonl"
    assert main(["generate", "--config", str(config), "--seed", "5", "--out", str(out)]) == EX_OK
    return out


class TestGenerate:
    def test_single_session(self, tmp_path):
        config = tmp_path / "one.json"
        config.write_text(json.dumps({"n": 3, "d": 2, "num_sessions": 1}))
        out = tmp_path / "one.jsonl"
        assert main(["generate", "--config", str(config), "--out", str(out)]) == EX_OK
        (line,) = out.read_text().splitlines()
        record = json.loads(line)
        assert sum(len(item) for item in record["features"]) == 6
        assert (tmp_path / "one.truth.json").exists()

    def test_same_seed_same_bytes(self, tmp_path, generated):
        again = tmp_path / "again.jsonl"
        config = tmp_path / "generate.json"
        assert main(["generate", "--config", str(config), "--seed", "5", "--out", str(again)]) == EX_OK
        assert again.read_bytes() == generated.read_bytes()

    def test_output_loads_cleanly(self, generated):
        data = load_sessions(generated)
        assert (len(data), data.n, data.d) == (80, 4, 3)

    def test_manifest(self, generated):
        manifest = RunManifest.model_validate_json(manifest_path(generated).read_text())
        assert manifest.command == "generate"
        assert manifest.seed == 5
        assert manifest.config["num_sessions"] == 80
        assert manifest.outputs["sessions"] == str(generated)

    def test_dwell_sessions(self, tmp_path):
        config = tmp_path / "dwell.json"
        config.write_text(json.dumps({"n": 3, "d": 2, "num_sessions": 5, "orders_per_list": 3}))
        out = tmp_path / "dwell.jsonl"
        assert main(["generate", "--config", str(config), "--out", str(out)]) == EX_OK
        assert len(load_sessions(out)) == 15

    def test_output_path_is_a_directory(self, tmp_path, caplog):
        assert main(["generate", "--out", str(tmp_path)]) == EX_DATAERR
        assert "cannot write output" in caplog.text

    def test_unwritable_truth_leaves_no_sessions(self, tmp_path):
        out = tmp_path / "sessions.jsonl"
        assert main(["generate", "--out", str(out), "--truth-out", str(tmp_path)]) == EX_DATAERR
        assert not out.exists()

    def test_seed_from_settings(self, tmp_path, monkeypatch):
        monkeypatch.setenv("ORDER_LTR_SEED", "5")
        config = tmp_path / "generate.json"
        config.write_text(json.dumps({"n": 4, "d": 3, "num_sessions": 80, "gain_vector": [0.4, 0.3, 0.2, 0.1]}))
        out = tmp_path / "from-env.jsonl"
        assert main(["generate", "--config", str(config), "--out", str(out)]) == EX_OK
        assert RunManifest.model_validate_json(manifest_path(out).read_text()).seed == 5

    def test_invalid_config_is_a_usage_error(self, tmp_path):
        config = tmp_path / "bad.json"
        config.write_text(json.dumps({"n": 3, "gain_vector": [1.0]}))
        assert main(["generate", "--config", str(config), "--out", str(tmp_path / "x.jsonl")]) == EX_USAGE
        assert not (tmp_path / "x.jsonl").exists()


class TestTrain:
    def test_empty_file_writes_no_model(self, tmp_path):
        sessions = tmp_path / "empty.jsonl"
        sessions.write_text("")
        out = tmp_path / "model.json"
        assert main(["train", str(sessions), "--method", "listmle", "--out", str(out)]) == EX_DATAERR
        assert not out.exists()

    def test_malformed_record(self, tmp_path, generated, caplog):
        broken = tmp_path / "broken.jsonl"
        lines = generated.read_text().splitlines()
        lines[2] = lines[2].replace('"score":', '"score":-')
        broken.write_text("\n".join(lines) + "\n")
        assert main(["train", str(broken), "--method", "payoff-gain", "--out", str(tmp_path / "m.json")]) == EX_DATAERR
        assert f"{broken}:3:" in caplog.text

    def test_unit_scores_make_weighting_irrelevant(self, tmp_path, generated):
        data = load_sessions(generated)
        ones = tmp_path / "ones.jsonl"
        write_sessions(ones, data.with_orders((s.shown_order for s in data), score=1.0))
        plain, weighted = tmp_path / "plain.json", tmp_path / "weighted.json"
        main(["train", str(ones), "--method", "listmle", "--out", str(plain)])
        main(["train", str(ones), "--method", "weighted-listmle", "--out", str(weighted)])
        assert plain.read_bytes() == weighted.read_bytes()

    def test_payoff_gain_model_reloads(self, tmp_path, generated):
        out = tmp_path / "pg.json"
        code = main(["train", str(generated), "--method", "payoff-gain", "--lambda", "0.01", "--out", str(out)])
        assert code in (EX_OK, EX_MAX_ITERATIONS)
        data = load_sessions(generated)
        reference = train_alternating(data, 0.01, AltMinConfig())
        loaded = load_model(out)
        for s in data:
            assert predict_score(loaded, s.items, s.shown_order) == pytest.approx(
                predict_score(reference, s.items, s.shown_order), abs=1e-12
            )
        manifest = RunManifest.model_validate_json(manifest_path(out).read_text())
        assert manifest.config["lambda"] == 0.01
        assert manifest.exit_code == code

    def test_iteration_cap_exit_code(self, tmp_path, generated):
        out = tmp_path / "capped.json"
        code = main(["train", str(generated), "--method", "weighted-listmle", "--max-iters", "1", "--out", str(out)])
        assert code == EX_MAX_ITERATIONS
        assert out.exists()

    def test_stalled_line_search_is_recorded(self, tmp_path, generated, monkeypatch):
        history = TrainingHistory((2.0, 1.5), 4, converged=True, stalled=True)
        monkeypatch.setattr("order_ltr.cli.train_pl", lambda data, cfg, weighted: PLModel(np.zeros(3), history=history))
        out = tmp_path / "stalled.json"
        assert main(["train", str(generated), "--method", "listmle", "--out", str(out)]) == EX_OK
        manifest = RunManifest.model_validate_json(manifest_path(out).read_text())
        assert manifest.warnings == ["line search stalled after 4 iterations"]

    def test_relevance_orders_from_ground_truth(self, tmp_path, generated):
        out = tmp_path / "relevance.json"
        truth = generated.with_name("sessions.truth.json")
        code = main(["train", str(generated), "--method", "listmle", "--truth", str(truth), "--out", str(out)])
        assert code in (EX_OK, EX_MAX_ITERATIONS)
        assert load_model(out).d == 3

    def test_unknown_method(self, generated, tmp_path):
        with pytest.raises(SystemExit) as info:
            main(["train", str(generated), "--method", "svm", "--out", str(tmp_path / "m.json")])
        assert info.value.code == EX_USAGE


class TestInfer:
    def test_singleton_lists(self, tmp_path):
        config = tmp_path / "n1.json"
        config.write_text(json.dumps({"n": 1, "d": 2, "num_sessions": 10}))
        sessions, model, orders = tmp_path / "n1.jsonl", tmp_path / "n1-model.json", tmp_path / "n1-orders.jsonl"
        main(["generate", "--config", str(config), "--out", str(sessions)])
        assert main(["train", str(sessions), "--method", "listmle", "--out", str(model)]) == EX_OK
        assert main(["infer", str(model), str(sessions), "--out", str(orders)]) == EX_OK
        assert load_orders(orders) == [Permutation((1,))] * 10

    def test_repeatable(self, tmp_path, generated):
        model = tmp_path / "pl.json"
        main(["train", str(generated), "--method", "weighted-listmle", "--out", str(model)])
        first, second = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        assert main(["infer", str(model), str(generated), "--out", str(first)]) == EX_OK
        assert main(["infer", str(model), str(generated), "--out", str(second)]) == EX_OK
        assert first.read_bytes() == second.read_bytes()
        assert len(load_orders(first)) == 80

    @pytest.mark.parametrize("solver", ["auto", "exact", "greedy"])
    def test_payoff_gain_orders_are_best(self, tmp_path, make_items, rng, solver):
        model = PayoffGainModel(np.array([0.5, -0.3, 0.4]), rng.uniform(0.1, 2.0, size=5))
        lists = [make_items(3, 5) for _ in range(8)]
        save_model(tmp_path / "pg.json", model)
        write_lists(tmp_path / "lists.jsonl", lists)
        out = tmp_path / "orders.jsonl"
        assert main(["infer", str(tmp_path / "pg.json"), str(tmp_path / "lists.jsonl"), "--solver", solver, "--out", str(out)]) == EX_OK
        for items, order in zip(lists, load_orders(out), strict=True):
            best = max(predict_score(model, items, perm) for perm in all_permutations(5))
            assert predict_score(model, items, order) == pytest.approx(best, rel=1e-12)

    def test_list_length_mismatch(self, tmp_path, make_items):
        save_model(tmp_path / "pg.json", PayoffGainModel(np.zeros(3), np.ones(4)))
        write_lists(tmp_path / "lists.jsonl", [make_items(3, 5)])
        out = tmp_path / "orders.jsonl"
        assert main(["infer", str(tmp_path / "pg.json"), str(tmp_path / "lists.jsonl"), "--out", str(out)]) == EX_DATAERR
        assert not out.exists()


class TestEvaluate:
    def test_generating_model_scores_perfectly(self, tmp_path, make_items):
        model = PayoffGainModel(np.array([0.6, 0.3]), np.array([3.0, 2.0, 1.0]))
        rows = []
        for _ in range(6):
            items = make_items(2, 3)
            for perm in list(all_permutations(3))[:3]:
                rows.append(Session(items, perm, predict_score(model, items, perm)))
        write_sessions(tmp_path / "s.jsonl", Dataset(tuple(rows)))
        save_model(tmp_path / "pg.json", model)
        report = tmp_path / "report.csv"
        args = ["evaluate", str(tmp_path / "s.jsonl"), "--model", f"pg={tmp_path / 'pg.json'}", "--out", str(report)]
        assert main(args) == EX_OK
        (row,) = read_table(report)
        assert set(row) == {"model_name", "avg_ndcg", "top1_avg_score", "num_groups", "num_skipped"}
        assert row["model_name"] == "pg"
        assert float(row["avg_ndcg"]) == pytest.approx(1.0)
        assert int(row["num_groups"]) == 6

    def test_single_order_groups_average_every_score(self, tmp_path, generated):
        model = tmp_path / "pl.json"
        main(["train", str(generated), "--method", "listmle", "--out", str(model)])
        report = tmp_path / "report.csv"
        assert main(["evaluate", str(generated), "--model", str(model), "--out", str(report)]) == EX_OK
        (row,) = read_table(report)
        assert row["model_name"] == "pl"
        assert float(row["avg_ndcg"]) == 1.0
        assert float(row["top1_avg_score"]) == pytest.approx(load_sessions(generated).scores.mean())

    def test_duplicate_model_names(self, tmp_path, generated):
        model = tmp_path / "pl.json"
        main(["train", str(generated), "--method", "listmle", "--out", str(model)])
        args = ["evaluate", str(generated), "--model", f"a={model}", "--model", f"a={model}", "--out", str(tmp_path / "r.csv")]
        assert main(args) == EX_USAGE


class TestBenchmarks:
    def test_benchmark_table(self, tmp_path):
        config = tmp_path / "bench.json"
        config.write_text(
            json.dumps(
                {
                    "n": 3,
                    "d": 3,
                    "n_train": 80,
                    "n_test": 40,
                    "gain_vectors": [[1 / 3] * 3, [0.1, 0.8, 0.1]],
                    "gd": {"max_iters": 200},
                    "altmin": {"max_outer": 50},
                }
            )
        )
        out = tmp_path / "table.csv"
        assert main(["benchmark", "--config", str(config), "--seed", "3", "--out", str(out)]) == EX_OK
        uniform, skewed = read_table(out)
        assert uniform["listmle_mean"] == uniform["weighted_listmle_mean"] == uniform["payoff_gain_mean"]
        assert skewed["seed"] == "3"
        assert manifest_path(out).exists()

    def test_benchmark_reads_settings(self, tmp_path, monkeypatch):
        monkeypatch.setenv("ORDER_LTR_WORKERS", "2")
        monkeypatch.setenv("ORDER_LTR_LAM", "0.01")
        monkeypatch.setenv("ORDER_LTR_SEED", "8")
        config = tmp_path / "bench.json"
        config.write_text(json.dumps({"n": 3, "d": 2, "n_train": 40, "n_test": 20, "gain_vectors": [[0.1, 0.8, 0.1]]}))
        out = tmp_path / "table.csv"
        assert main(["benchmark", "--config", str(config), "--seed", "3", "--out", str(out)]) == EX_OK
        manifest = RunManifest.model_validate_json(manifest_path(out).read_text())
        assert (manifest.config["workers"], manifest.config["lam"], manifest.seed) == (2, 0.01, 3)

    def test_dwell_benchmark_report(self, tmp_path):
        config = tmp_path / "dwell.json"
        config.write_text(
            json.dumps(
                {
                    "num_lists": 40,
                    "d": 3,
                    "split": {"num_repeats": 2},
                    "gd": {"max_iters": 200},
                    "altmin": {"max_outer": 50},
                }
            )
        )
        out = tmp_path / "dwell.csv"
        assert main(["dwell-benchmark", "--config", str(config), "--out", str(out)]) == EX_OK
        assert [row["model_name"] for row in read_table(out)] == ["listmle", "weighted_listmle", "payoff_gain"]


def test_missing_subcommand():
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == EX_USAGE
