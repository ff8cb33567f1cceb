import os

import numpy as np
import pytest

from tkge.checkpoint import load_checkpoint, save_checkpoint
from tkge.cli import load_config, main, svg_line_chart
from tkge.data import save_tsv
from tkge.errors import ParseError, VocabularyMismatchError
from tkge.models import init_params
from tkge.training import TrainConfig
from conftest import random_dataset


@pytest.fixture
def dataset_dir(tmp_path, rng):
    ds = random_dataset(rng, n_entities=6, n_train=40, n_valid=8, n_test=8)
    path = tmp_path / "data"
    save_tsv(ds, str(path))
    return ds, str(path)


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text("model = DistMult\ndim = 4\nnegative_ratio = 3\n"
                    "batch_size = 8\nepochs = 2\nvalidate_every = 1\n"
                    "# a comment line\n")
    return str(path)


def test_checkpoint_roundtrip_bitwise(tmp_path, rng):
    ds = random_dataset(rng)
    vocab = ds.vocabulary
    for kind, d_t in (("DE-SimplE", 3), ("HyTE", 0)):
        params = init_params(kind, vocab.n_entities, vocab.n_relations,
                             vocab.n_timestamps, 5, rng, d_t=d_t)
        path = tmp_path / f"{kind}.tkge"
        save_checkpoint(str(path), params, vocab, config={"model": kind})
        loaded, config = load_checkpoint(str(path), vocab=vocab)
        assert config == {"model": kind}
        assert loaded.kind == kind and loaded.dim == 5
        assert loaded.ent_spec == params.ent_spec
        assert set(loaded.tables) == set(params.tables)
        for name in params.tables:
            assert loaded.tables[name].tobytes() == params.tables[name].tobytes()


def test_checkpoint_vocab_mismatch(tmp_path, rng):
    ds = random_dataset(rng)
    other = random_dataset(np.random.default_rng(999), n_entities=5)
    params = init_params("DistMult", ds.vocabulary.n_entities,
                         ds.vocabulary.n_relations,
                         ds.vocabulary.n_timestamps, 4, rng)
    path = str(tmp_path / "m.tkge")
    save_checkpoint(path, params, ds.vocabulary)
    with pytest.raises(VocabularyMismatchError):
        load_checkpoint(path, vocab=other.vocabulary)
    # without a vocabulary the hashes are not checked
    load_checkpoint(path)


def test_checkpoint_rejects_garbage(tmp_path):
    path = tmp_path / "junk.tkge"
    path.write_bytes(b"not a checkpoint at all")
    with pytest.raises(ParseError):
        load_checkpoint(str(path))


def test_load_config_defaults_and_overrides(config_file):
    cfg = load_config(config_file)
    assert cfg.model == "DistMult" and cfg.dim == 4
    assert cfg.learning_rate == TrainConfig().learning_rate
    cfg = load_config(config_file, {"dim": "7", "filter_negatives": "true",
                                    "model": None})
    assert cfg.dim == 7 and cfg.filter_negatives is True
    assert cfg.model == "DistMult"  # None override is ignored


def test_load_config_errors(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("no_such_key = 1\n")
    with pytest.raises(ValueError):
        load_config(str(bad))
    bad.write_text("just a line without equals\n")
    with pytest.raises(ValueError):
        load_config(str(bad))
    bad.write_text("filter_negatives = maybe\n")
    with pytest.raises(ValueError):
        load_config(str(bad))


def test_cli_train_eval_pipeline(dataset_dir, config_file, tmp_path, capsys):
    _, data = dataset_dir
    out = str(tmp_path / "run")
    assert main(["train", data, "--config", config_file, "--out", out]) == 0
    assert os.path.exists(os.path.join(out, "checkpoint.tkge"))
    history = open(os.path.join(out, "history.csv")).read().splitlines()
    assert history[0] == "epoch,loss,val_mrr"
    assert len(history) == 3  # validated after each of the two epochs
    report = open(os.path.join(out, "report_valid.csv")).read().splitlines()
    assert report[0] == "model,split,mrr,hit1,hit3,hit10"
    assert report[1].startswith("DistMult,valid,")

    ckpt = os.path.join(out, "checkpoint.tkge")
    assert main(["eval", ckpt, data, "--split", "test",
                 "--out", str(tmp_path / "eval")]) == 0
    assert "DistMult" in capsys.readouterr().out
    assert os.path.exists(str(tmp_path / "eval" / "report_test.csv"))


def test_cli_train_deterministic(dataset_dir, config_file, tmp_path):
    _, data = dataset_dir
    outs = []
    for name in ("a", "b"):
        out = str(tmp_path / name)
        assert main(["train", data, "--config", config_file, "--out", out]) == 0
        outs.append(out)
    for fname in ("checkpoint.tkge", "history.csv"):
        a = open(os.path.join(outs[0], fname), "rb").read()
        b = open(os.path.join(outs[1], fname), "rb").read()
        assert a == b, fname


def test_cli_flag_overrides_config(dataset_dir, config_file, tmp_path):
    _, data = dataset_dir
    out = str(tmp_path / "run")
    assert main(["train", data, "--config", config_file, "--out", out,
                 "--model", "TTransE", "--epochs", "1"]) == 0
    _, config = load_checkpoint(os.path.join(out, "checkpoint.tkge"))
    assert config["model"] == "TTransE" and config["epochs"] == 1


def test_cli_eval_vocab_mismatch_is_usage_error(dataset_dir, config_file,
                                                tmp_path, rng):
    _, data = dataset_dir
    out = str(tmp_path / "run")
    assert main(["train", data, "--config", config_file, "--out", out]) == 0
    other = random_dataset(np.random.default_rng(7), n_entities=5)
    other_dir = str(tmp_path / "other")
    save_tsv(other, other_dir)
    assert main(["eval", os.path.join(out, "checkpoint.tkge"), other_dir]) == 1


def test_cli_missing_dataset_is_usage_error(tmp_path):
    assert main(["train", str(tmp_path / "nope")]) == 1


def test_cli_env_data_root(dataset_dir, config_file, tmp_path, monkeypatch):
    _, data = dataset_dir
    monkeypatch.setenv("TKGE_DATA_ROOT", os.path.dirname(data))
    out = str(tmp_path / "run")
    assert main(["train", os.path.basename(data), "--config", config_file,
                 "--out", out, "--epochs", "1"]) == 0


def test_cli_split_unseen(dataset_dir, tmp_path, capsys):
    _, data = dataset_dir
    out = str(tmp_path / "unseen")
    assert main(["split-unseen", data, "--days",
                 "5,6,7,8,9,10,11,12,13,14,15", "--out", out]) == 0
    assert os.path.exists(os.path.join(out, "train.txt"))
    assert "wrote" in capsys.readouterr().out


def test_cli_sweep_gamma(dataset_dir, config_file, tmp_path):
    _, data = dataset_dir
    out = str(tmp_path / "sweep")
    assert main(["sweep", data, "--config", config_file, "--out", out,
                 "--axis", "gamma", "--values", "0.25,0.5",
                 "--model", "DE-DistMult", "--epochs", "1"]) == 0
    rows = open(os.path.join(out, "sweep.csv")).read().splitlines()
    assert rows[0] == "gamma,test_mrr"
    assert len(rows) == 3
    svg = open(os.path.join(out, "sweep.svg")).read()
    assert svg.startswith("<svg") and "polyline" in svg


def test_cli_sweep_curve(dataset_dir, config_file, tmp_path):
    _, data = dataset_dir
    out = str(tmp_path / "curve")
    assert main(["sweep", data, "--config", config_file, "--out", out,
                 "--axis", "curve", "--models", "DistMult,DE-DistMult",
                 "--d-t", "2", "--epochs", "2"]) == 0
    rows = open(os.path.join(out, "curve.csv")).read().splitlines()
    assert rows[0] == "model,epoch,val_mrr"
    assert len(rows) == 5  # two models x two validation points
    assert os.path.exists(os.path.join(out, "curve.svg"))


def test_cli_theory_expressivity(capsys):
    assert main(["theory", "--mode", "expressivity", "--entities", "1",
                 "--relations", "1", "--timestamps", "2", "--exhaustive"]) == 0
    assert "4/4 worlds pass" in capsys.readouterr().out
    assert main(["theory", "--mode", "expressivity", "--worlds", "3"]) == 0


def test_cli_theory_size_limit():
    assert main(["theory", "--mode", "expressivity", "--entities", "50",
                 "--relations", "10", "--timestamps", "50"]) == 1


def test_cli_theory_tying(capsys):
    assert main(["theory", "--mode", "tying"]) == 0
    out = capsys.readouterr().out
    for scheme in ("symmetric", "anti_symmetric", "inverse", "entails"):
        assert f"tying {scheme}: pass" in out


def test_svg_chart_degenerate_series(tmp_path):
    path = str(tmp_path / "c.svg")
    svg_line_chart(path, {"flat": ([0, 1, 2], [0.5, 0.5, 0.5])},
                   "x", "y", "flat line")
    content = open(path).read()
    assert content.startswith("<svg") and content.endswith("</svg>")
