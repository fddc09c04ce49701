"""Training loop: determinism, convergence, metric rows, numeric failures."""

import json
import math
import random

import numpy as np
import pytest

from whymine.dataset import EOS, Example, split
from whymine.nn import (LanguageModel, NumericFailure, Seq2SeqModel,
                        TrainConfig, evaluate_model, train)


def copy_task_examples(n=500, vocab_hi=25, min_len=2, max_len=4, seed=11):
    rng = random.Random(seed)
    examples = []
    for _ in range(n):
        toks = tuple(rng.randint(5, vocab_hi - 1)
                     for _ in range(rng.randint(min_len, max_len)))
        examples.append(Example(source=toks, target=toks + (EOS,)))
    return examples


def copy_task_config(epochs=30, precision="fast"):
    return TrainConfig(optimizer="noam_adam", lr=0.1, weight_decay=0.0,
                       dropout=0.0, warmup_steps=50, batch_size=16,
                       epochs=epochs, seed=0, precision=precision,
                       noam_factor=2.0)


@pytest.fixture(scope="module")
def copy_run():
    ds = split(copy_task_examples(), seed=0)
    model = Seq2SeqModel(vocab_size=25, d_w=32, d_h=128, dropout=0.0,
                         precision="fast", seed=1)
    rows = train(model, ds, copy_task_config())
    return model, ds, rows


def test_copy_task_reaches_accuracy(copy_run):
    _, _, rows = copy_run
    assert max(r["valid_acc"] for r in rows[1:]) >= 0.95


def test_copy_task_perplexity_collapses(copy_run):
    _, _, rows = copy_run
    assert rows[0]["epoch"] == 0
    assert rows[30]["epoch"] == 30
    assert rows[30]["valid_ppl"] < 0.10 * rows[0]["valid_ppl"]


def test_train_loss_non_increasing_early(copy_run):
    _, _, rows = copy_run
    losses = [r["train_loss"] for r in rows[1:6]]
    violations = sum(1 for a, b in zip(losses, losses[1:]) if b > a)
    assert violations <= 1


def test_best_valid_weights_kept(copy_run):
    model, ds, rows = copy_run
    best_ppl = min(r["valid_ppl"] for r in rows)
    ppl, _ = evaluate_model(model, ds.valid)
    assert ppl == pytest.approx(best_ppl, rel=1e-6)


def test_training_is_deterministic_high_precision():
    ds = split(copy_task_examples(n=60), seed=0)
    cfg = TrainConfig(optimizer="adagrad", lr=0.1, dropout=0.1, batch_size=8,
                      epochs=1, seed=5, precision="high")
    losses = []
    for _ in range(2):
        model = Seq2SeqModel(vocab_size=25, d_w=8, d_h=12, dropout=0.1,
                             precision="high", seed=5)
        rows = train(model, ds, cfg)
        losses.append(rows[1]["train_loss"])
    # identical to 12 significant digits (they are in fact bit-identical)
    assert f"{losses[0]:.12e}" == f"{losses[1]:.12e}"


def test_uniform_model_perplexity_is_vocab_size():
    model = LanguageModel(vocab_size=100, d_w=8, d_h=16, dropout=0.0,
                          precision="high", seed=0, init_scale=0.0)
    examples = [Example(source=(5, 6, 7), target=(8, 9, EOS))
                for _ in range(20)]
    ppl, acc = evaluate_model(model, examples)
    assert abs(ppl - 100.0) < 0.5


def test_numeric_failure_from_poisoned_lr():
    ds = split(copy_task_examples(n=40), seed=0)
    model = Seq2SeqModel(vocab_size=25, d_w=8, d_h=12, dropout=0.0,
                         precision="fast", seed=3)
    # an absurd learning rate blows the weights up after the first step and
    # the next batch's forward pass goes non-finite
    cfg = TrainConfig(optimizer="adagrad", lr=1e38, dropout=0.0, batch_size=8,
                      epochs=1, seed=0, precision="fast")
    with np.errstate(all="ignore"):
        with pytest.raises(NumericFailure) as err:
            train(model, ds, cfg)
    assert err.value.epoch == 1
    assert err.value.batch >= 1


def test_log_file_rows(tmp_path, copy_run):
    ds = split(copy_task_examples(n=60), seed=0)
    model = Seq2SeqModel(vocab_size=25, d_w=8, d_h=12, dropout=0.0,
                         precision="fast", seed=2)
    cfg = TrainConfig(optimizer="adagrad", lr=0.1, dropout=0.0, batch_size=8,
                      epochs=2, seed=0, precision="fast")
    log = tmp_path / "train.log.jsonl"
    rows = train(model, ds, cfg, log_path=log)
    lines = [json.loads(l) for l in log.read_text().splitlines()]
    assert lines == rows
    assert [r["epoch"] for r in lines] == [0, 1, 2]
    assert lines[0]["train_loss"] is None
    for row in lines:
        assert set(row) == {"epoch", "train_loss", "valid_ppl", "valid_acc"}


def test_start_epoch_continues_numbering():
    ds = split(copy_task_examples(n=40), seed=0)
    model = Seq2SeqModel(vocab_size=25, d_w=8, d_h=12, dropout=0.0,
                         precision="fast", seed=2)
    cfg = TrainConfig(optimizer="adagrad", lr=0.1, dropout=0.0, batch_size=8,
                      epochs=2, seed=0, precision="fast")
    rows = train(model, ds, cfg, start_epoch=3)
    assert [r["epoch"] for r in rows] == [3, 4, 5]


def test_lm_training_uses_marker_sequences():
    examples = [Example(source=(5, 6), target=(7, EOS)) for _ in range(20)]
    ds = split(examples, seed=0)
    model = LanguageModel(vocab_size=10, d_w=8, d_h=12, dropout=0.0,
                          precision="fast", seed=0)
    cfg = TrainConfig(optimizer="adagrad", lr=0.1, dropout=0.0, batch_size=4,
                      epochs=1, seed=0, precision="fast")
    rows = train(model, ds, cfg, marker_id=9)
    assert math.isfinite(rows[-1]["valid_ppl"])
