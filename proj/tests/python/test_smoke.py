"""Smoke tests for the Python bindings and the CLI binary."""

import os
import subprocess

import pytest

import _sodmv as sodmv


@pytest.fixture(scope="module")
def corpus():
    g = sodmv.random_grammar(3, seed=2, sharpness=2.0)
    return sodmv.generate(g, n=60, max_len=8, seed=4)


def test_generate_deterministic():
    g = sodmv.random_grammar(3, seed=2)
    a = sodmv.generate(g, n=20, seed=7)
    b = sodmv.generate(g, n=20, seed=7)
    assert len(a) == len(b) == 20
    for sa, sb in zip(a.sentences, b.sentences):
        assert sa.pos_ids == sb.pos_ids
        assert sa.gold_heads == sb.gold_heads
    assert len(g.vocab) == 3


def test_corpus_roundtrip(corpus, tmp_path):
    path = str(tmp_path / "c.conllu")
    sodmv.write_corpus(corpus, path)
    back = sodmv.read_corpus(path)
    assert len(back) == len(corpus)
    for sa, sb in zip(back.sentences, corpus.sentences):
        assert sa.pos_tags == sb.pos_tags
        assert sa.gold_heads == sb.gold_heads


def test_train_parse_uas(corpus, tmp_path):
    cfg = sodmv.TrainConfig()
    cfg.method = "dmo"
    cfg.model = "sibling"
    cfg.init = "uniform"
    cfg.max_epochs = 2
    cfg.batch_size = 30
    cfg.seed = 1
    res = sodmv.train(corpus, corpus, cfg)
    assert len(res.log_lines) == 2
    assert res.best_epoch >= 1

    pred = sodmv.parse(res.model, corpus)
    assert len(pred) == len(corpus)
    for tree, sent in zip(pred, corpus.sentences):
        assert len(tree.heads) == len(sent)
        assert all(0 <= h <= len(sent) for h in tree.heads)
        assert tree.heads.count(0) == 1

    score = sodmv.uas(pred, corpus)
    assert 0.0 <= score <= 1.0

    # archive round trip preserves behavior
    mpath = str(tmp_path / "m.model")
    sodmv.save_model(res.model, mpath)
    loaded = sodmv.load_model(mpath)
    pred2 = sodmv.parse(loaded, corpus)
    assert [t.heads for t in pred2] == [t.heads for t in pred]
    lp = sodmv.sentence_logprob(loaded, corpus.sentences[0])
    assert lp == sodmv.sentence_logprob(res.model, corpus.sentences[0])
    assert lp < 0


def test_uas_identity(corpus):
    gold_trees = [sodmv.ParseTree(s.gold_heads) for s in corpus.sentences]
    assert sodmv.uas(gold_trees, corpus) == 1.0
    with pytest.raises(ValueError):
        sodmv.uas(gold_trees, corpus, punct="sometimes")


def test_run_cli_in_process(tmp_path):
    out = str(tmp_path / "g.conllu")
    assert sodmv.run_cli(["generate", "--random-tags", "3", "--n", "10",
                          "--out", out, "--seed", "3"]) == 0
    assert os.path.exists(out)
    assert sodmv.run_cli(["eval", "--pred", out, "--gold", out]) == 0
    assert sodmv.run_cli(["--definitely-not-a-flag"]) == 2


def test_cli_binary(tmp_path):
    cli = os.environ.get("SODMV_CLI")
    if not cli:
        pytest.skip("SODMV_CLI not set")
    data = str(tmp_path / "d.conllu")
    r = subprocess.run([cli, "generate", "--random-tags", "3", "--n", "15",
                        "--seed", "9", "--out", data])
    assert r.returncode == 0
    r = subprocess.run([cli, "eval", "--pred", data, "--gold", data],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert r.stdout.startswith("uas 1.0000")
