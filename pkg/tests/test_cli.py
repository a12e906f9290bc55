import csv
import json

import numpy as np
import pytest

from cgrader import persist, pipeline
from cgrader.cli import EXIT_FIT, EXIT_OK, EXIT_PARTIAL, EXIT_USAGE, main
from cgrader.corpus import Dataset, Submission, load_dataset, save_dataset
from cgrader.synth import Rubric, synthesize
from cgrader.tabular import TreeNode

SEED_CODE = """\
#include <stdio.h>
int main(void) {
    int total = 0;
    for (int i = 0; i < 10; i++) {
        total = total + i;
    }
    if (total >= 45) {
        printf("%d\\n", total);
    }
    while (total > 0) {
        total = total - 1;
    }
    return 0;
}
"""


@pytest.fixture
def seed_dir(tmp_path):
    d = tmp_path / "seeds"
    d.mkdir()
    (d / "sum.c").write_text(SEED_CODE, encoding="utf-8")
    return d


@pytest.fixture
def corpus_csv(tmp_path):
    seeds = [Submission("sum", SEED_CODE, 10.0)]
    ds = synthesize(seeds, 80, Rubric(), np.random.default_rng(0))
    path = tmp_path / "corpus.csv"
    save_dataset(ds, path)
    return path


class TestSynthCommand:
    def test_writes_corpus_and_plans(self, seed_dir, tmp_path, capsys):
        out = tmp_path / "corpus.csv"
        plans = tmp_path / "plans.csv"
        code = main([
            "synth", "--seeds", str(seed_dir), "--count", "30",
            "--out", str(out), "--seed", "1", "--plans", str(plans),
        ])
        assert code == EXIT_OK
        ds = load_dataset(out)
        assert len(ds) == 30
        with open(plans, encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["id", "kinds"]
        assert len(rows) == 31
        assert "wrote 30 rows" in capsys.readouterr().out

    def test_empty_seed_dir_is_usage_error(self, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        code = main([
            "synth", "--seeds", str(empty), "--count", "5",
            "--out", str(tmp_path / "x.csv"),
        ])
        assert code == EXIT_USAGE

    def test_deterministic(self, seed_dir, tmp_path):
        paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
        for path in paths:
            main(["synth", "--seeds", str(seed_dir), "--count", "25",
                  "--out", str(path), "--seed", "7"])
        assert paths[0].read_bytes() == paths[1].read_bytes()


class TestTrainCommand:
    def test_ridge_end_to_end(self, corpus_csv, tmp_path, capsys):
        out = tmp_path / "model.json"
        code = main([
            "train", "--data", str(corpus_csv), "--model", "ridge",
            "--dim", "32", "--seq-len", "8", "--out", str(out), "--seed", "3",
        ])
        assert code == EXIT_OK
        text = capsys.readouterr().out
        assert "train: rmse=" in text and "validation: rmse=" in text
        kind, _, emb = persist.load_model(out)
        assert kind == "ridge"
        assert emb["provider"] == "tfidf"

    def test_unknown_model_kind_exits_2(self, corpus_csv, tmp_path):
        with pytest.raises(SystemExit) as err:
            main(["train", "--data", str(corpus_csv), "--model", "svm",
                  "--out", str(tmp_path / "m.json")])
        assert err.value.code == 2

    def test_missing_data_exits_2(self, tmp_path):
        code = main(["train", "--data", str(tmp_path / "nope.csv"),
                     "--model", "ridge", "--out", str(tmp_path / "m.json")])
        assert code == EXIT_USAGE

    def test_external_without_vectors_exits_2(self, corpus_csv, tmp_path):
        code = main(["train", "--data", str(corpus_csv), "--model", "ridge",
                     "--embedding", "external",
                     "--out", str(tmp_path / "m.json")])
        assert code == EXIT_USAGE


class TestGradeCommand:
    def test_constant_model_prints_constant(self, tmp_path, capsys):
        from cgrader.embed import TfIdfProvider
        from cgrader.tabular import ForestModel, TreeParams

        provider = TfIdfProvider.fit([SEED_CODE], d=16, L=4)
        head = ForestModel(trees=[TreeNode(value=7.0)], n_trees=1,
                           tree_params=TreeParams())
        path = tmp_path / "const.json"
        persist.save_model(path, "rf", head, provider.config())
        src = tmp_path / "prog.c"
        src.write_text(SEED_CODE, encoding="utf-8")
        code = main(["grade", "--model", str(path), "--code", str(src)])
        assert code == EXIT_OK
        assert capsys.readouterr().out.strip() == "7.00"

    def test_missing_model_exits_2(self, tmp_path):
        code = main(["grade", "--model", str(tmp_path / "nope.json"),
                     "--code", str(tmp_path / "nope.c")])
        assert code == EXIT_USAGE


class TestExperimentCommand:
    def make_config(self, tmp_path, corpus_csv, **overrides):
        doc = {
            "data": str(corpus_csv),
            "output": {
                "report": str(tmp_path / "report.csv"),
                "curves": str(tmp_path / "curves.csv"),
                "models_dir": str(tmp_path / "models"),
            },
            "embedding": {"provider": "tfidf", "dim": 32, "seq_len": 8},
            "split": {"ratios": [0.5, 0.25, 0.25], "seed": 0},
            "train": {"max_epochs": 2, "batch_size": 16, "patience": 2},
            "models": {
                "rf": {"grid": {"max_depth": [4]}},
                "ridge": {"grid": {"lambda": [1.0]}},
                "knn": {"grid": {"k": [3]}},
                "gbt": {"grid": {"n_rounds": [5], "learning_rate": [0.1],
                                 "max_depth": [2]}},
            },
        }
        doc.update(overrides)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(doc), encoding="utf-8")
        return path, doc

    def test_full_run_report_shape(self, tmp_path, corpus_csv):
        path, doc = self.make_config(tmp_path, corpus_csv)
        assert main(["experiment", "--config", str(path)]) == EXIT_OK
        with open(doc["output"]["report"], encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["model", "split", "rmse", "mae", "r2", "mape"]
        assert len(rows) == 17  # 8 models x 2 splits
        assert [r[0] for r in rows[1:]] == [
            k for k in pipeline.ALL_KINDS for _ in range(2)
        ]
        with open(doc["output"]["curves"], encoding="utf-8", newline="") as fh:
            curve_rows = list(csv.reader(fh))
        assert curve_rows[0] == ["model", "epoch", "train_loss", "val_loss"]
        assert {r[0] for r in curve_rows[1:]} == {"cnn", "lstm", "cnn_rf", "lstm_rf"}
        models_dir = tmp_path / "models"
        assert sorted(p.stem for p in models_dir.glob("*.json")) == sorted(
            pipeline.ALL_KINDS
        )

    def test_unknown_config_key_exits_2(self, tmp_path, corpus_csv):
        path, _ = self.make_config(tmp_path, corpus_csv, extra="oops")
        assert main(["experiment", "--config", str(path)]) == EXIT_USAGE

    def test_missing_config_exits_2(self, tmp_path):
        assert main(["experiment", "--config", str(tmp_path / "no.json")]) \
            == EXIT_USAGE


class TestConfigParsing:
    def test_unknown_model_name_rejected(self):
        with pytest.raises(pipeline.ConfigError):
            pipeline.ExperimentConfig.from_dict({
                "data": "d.csv",
                "output": {"report": "r", "curves": "c", "models_dir": "m"},
                "models": {"svm": {}},
            })

    def test_unknown_nested_key_rejected(self):
        with pytest.raises(pipeline.ConfigError):
            pipeline.ExperimentConfig.from_dict({
                "data": "d.csv",
                "output": {"report": "r", "curves": "c", "models_dir": "m"},
                "embedding": {"window": 5},
            })

    def test_defaults(self):
        cfg = pipeline.ExperimentConfig.from_dict({
            "data": "d.csv",
            "output": {"report": "r", "curves": "c", "models_dir": "m"},
        })
        assert cfg.embedding_provider == "tfidf"
        assert cfg.split_ratios == (0.5, 0.25, 0.25)
        assert cfg.train.max_epochs == 50
        assert cfg.train.batch_size == 64
