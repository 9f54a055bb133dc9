import math
import os
import subprocess

import pytest

import drc_ed

TINY = [
    "synth.n_train = 150",
    "synth.n_dev = 30",
    "synth.n_test = 30",
    "train.epochs = 2",
    "encoder.d_model = 16",
    "encoder.n_heads = 2",
]


def test_synthetic_corpus_and_stats():
    data, triggers = drc_ed.generate_synthetic(n_sentences=300, seed=7)
    assert len(data) == 300
    assert data.negative == "None"
    assert len(data.event_types) == 9
    assert set(triggers) == set(data.event_types) - {"None"}
    stats = drc_ed.corpus_stats(data)
    counts = [c for _, c in stats["S_SA"]]
    assert counts == sorted(counts, reverse=True)
    assert stats["N"] == sum(counts)
    assert stats["IR"] == pytest.approx(max(counts) / min(c for c in counts if c))
    assert stats["E_Major"] == [name for name, _ in stats["S_SA"][: stats["k"]]]


def test_jsonl_round_trip():
    data, _ = drc_ed.generate_synthetic(n_sentences=40, seed=3)
    again = drc_ed.parse_corpus(data.to_jsonl())
    assert again.sentences == data.sentences


def test_derangements():
    assert [len(drc_ed.enumerate_derangements(m)) for m in (2, 3, 4, 5)] == [1, 2, 9, 44]
    for seed in range(50):
        p = drc_ed.sample_derangement(6, seed)
        assert sorted(p) == list(range(6))
        assert all(p[i] != i for i in range(6))


def test_bad_config_raises():
    with pytest.raises(drc_ed.ConfigError):
        drc_ed.train("", ["train.bogus=1"])
    with pytest.raises(ValueError):
        drc_ed.train("edm.q = 3\n")


def test_train_evaluate_explain(tmp_path):
    model, info = drc_ed.train("\n".join(TINY), ["edm.enabled=true"])
    assert len(info["dev_f1"]) == 2
    assert 0.0 <= info["test"]["micro"]["f1"] <= 1.0
    _, _, test, triggers = drc_ed.load_splits("\n".join(TINY))
    metrics = model.evaluate(test)
    assert metrics == info["test"]

    shuffled = model.shuffle_test(test, shuffles=3, seed=1)
    assert len(shuffled["f1"]) == 3
    assert shuffled["mean_f1"] == pytest.approx(sum(shuffled["f1"]) / 3)

    path = tmp_path / "m.bin"
    model.save(str(path))
    loaded = drc_ed.load_model(str(path))
    assert loaded.evaluate(test) == metrics
    assert loaded.event_order == model.event_order

    event = "Attack"
    word = triggers[event][0]
    sal = model.saliency(f"the {word} happened", event)
    assert [t["token"] for t in sal["tokens"]] == ["the", word, "happened"]
    assert all(math.isfinite(t["score"]) for t in sal["tokens"])
    assert set(model.predict(f"the {word} happened")) <= set(test.event_types)


def test_cli_available():
    cli = os.environ.get("DRC_CLI")
    if not cli:
        pytest.skip("DRC_CLI not set")
    out = subprocess.run([cli, "--version"], capture_output=True, text=True, check=True)
    assert out.stdout.strip()
