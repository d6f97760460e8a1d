import numpy as np
import pytest

from dnc.checkpoint import from_state, load_checkpoint, save_checkpoint
from dnc.cli import main
from dnc.data import load_csv
from dnc.trainer import TrainConfig, train


def kv(text):
    return dict(line.split("=", 1) for line in text.strip().splitlines() if "=" in line and " " not in line)


@pytest.fixture(scope="module")
def files(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    rc = main(["gen-data", "--classes", "3", "--subclusters", "2", "--dim", "5", "--per-cluster", "10",
               "--sigma", "0.1", "--seed", "1", "--out", str(d / "train.csv"), "--test-out", str(d / "test.csv")])
    assert rc == 0
    return d


TRAIN_FLAGS = ["--classifier", "dnc", "--k", "2", "--mu", "0.9", "--epsilon", "0.05", "--sinkhorn-iters", "3",
               "--memory-batches", "2", "--temperature", "1", "--epochs", "2", "--batch-size", "8", "--lr", "0.1",
               "--seed", "3", "--anchor-after-epoch", "1", "--hidden", "8", "--dim", "4"]


def test_train_eval_explain(files, capsys):
    ckpt = files / "m.ckpt"
    assert main(["train", "--data", str(files / "train.csv"), *TRAIN_FLAGS, "--out", str(ckpt)]) == 0
    capsys.readouterr()
    assert main(["eval", "--ckpt", str(ckpt), "--data", str(files / "test.csv"), "--knn-fine"]) == 0
    out = kv(capsys.readouterr().out)
    assert 0.0 <= float(out["top1"]) <= 1.0 and out["top5_defined"] == "false" and "knn_fine_top1" in out
    assert main(["explain", "--ckpt", str(ckpt), "--data", str(files / "test.csv"), "--query-index", "0",
                 "--top-m", "3", "--emit-rule", "1"]) == 0
    text = capsys.readouterr().out
    norms = [float(t.split("=")[1]) for t in text.split() if t.startswith("normalized=")]
    assert len(norms) == 3 and abs(sum(norms) - 1) < 1e-5
    out = kv(text)
    assert out["rule_disjuncts"] == "2" and out["rule_clauses"] == str(2 * 4)
    assert "THEN (class 1)" in text


def test_cli_matches_library(files):
    ckpt = files / "cli.ckpt"
    assert main(["train", "--data", str(files / "train.csv"), *TRAIN_FLAGS, "--out", str(ckpt)]) == 0
    cfg = TrainConfig(classifier_kind="dnc", k=2, mu=0.9, epsilon=0.05, sinkhorn_iters=3, memory_batches=2,
                      temperature=1.0, epochs=2, batch_size=8, learning_rate=0.1, seed=3, anchor_after_epoch=1,
                      hidden=(8,), dim=4)
    state = train(load_csv(files / "train.csv"), cfg)
    from_cli = load_checkpoint(ckpt)
    assert np.array_equal(from_cli.bank.centroids, state.bank.centroids)
    lib = files / "lib.ckpt"
    save_checkpoint(lib, from_state(state, dict(from_cli.extra)))
    assert lib.read_bytes() == ckpt.read_bytes()


def test_k_map(files, tmp_path):
    (tmp_path / "k.json").write_text("[1, 2, 3]")
    flags = [f for f in TRAIN_FLAGS]
    rc = main(["train", "--data", str(files / "train.csv"), *flags, "--k-map", str(tmp_path / "k.json"),
               "--out", str(tmp_path / "k.ckpt")])
    assert rc == 0
    assert load_checkpoint(tmp_path / "k.ckpt").bank.per_class.tolist() == [1, 2, 3]


def test_exit_codes(files, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["train", "--data", str(files / "train.csv")])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 1
    assert main(["train", "--data", str(tmp_path / "missing.csv"), "--out", str(tmp_path / "x")]) == 2
    (tmp_path / "bad.csv").write_text("0,1.0\n1,nan?\n")
    assert main(["train", "--data", str(tmp_path / "bad.csv"), "--out", str(tmp_path / "x")]) == 2
    assert main(["eval", "--ckpt", str(files / "train.csv"), "--data", str(files / "test.csv")]) == 2
    (tmp_path / "zero.csv").write_text("0,0.0,0.0\n1,0.0,0.0\n")
    rc = main(["train", "--data", str(tmp_path / "zero.csv"), "--hidden", "", "--dim", "2", "--epochs", "1",
               "--out", str(tmp_path / "z")])
    assert rc == 3
    assert main(["train", "--data", str(files / "train.csv"), "--mu", "1.5", "--out", str(tmp_path / "x")]) == 1
