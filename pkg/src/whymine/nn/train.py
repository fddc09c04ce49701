"""Deterministic mini-batch training with per-epoch validation metrics."""

from __future__ import annotations

import json
import math
import random
from typing import List, Optional, Sequence

import numpy as np

from ..dataset import DatasetSplit, Example
from .models import LanguageModel, Seq2SeqModel
from .optim import TrainConfig, make_optimizer


class NumericFailure(RuntimeError):
    """Loss went non-finite; carries where it happened."""

    def __init__(self, epoch: int, batch: int):
        self.epoch = epoch
        self.batch = batch
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}")


def _lm_sequences(examples: Sequence[Example], marker_id: Optional[int]):
    """Source and target joined into one stream, optionally via a marker token."""
    seqs = []
    for ex in examples:
        middle = (marker_id,) if marker_id is not None else ()
        seq = tuple(ex.source) + middle + tuple(ex.target)
        if len(seq) >= 2:
            seqs.append(seq)
    return seqs


def _batches(items, batch_size):
    for start in range(0, len(items), batch_size):
        yield items[start:start + batch_size]


def evaluate_model(model, examples: Sequence[Example],
                   marker_id: Optional[int] = None, batch_size: int = 64):
    """(perplexity, per-token accuracy) over a held-out example list."""
    total_nll = 0.0
    n_tokens = 0
    n_correct = 0
    if model.kind == "lm":
        seqs = _lm_sequences(examples, marker_id)
        for seq in seqs:
            dists, loglik = model.forward(seq)
            targets = np.asarray(seq[1:])
            total_nll -= loglik
            n_tokens += len(targets)
            n_correct += int((np.argmax(dists, axis=-1) == targets).sum())
    else:
        for ex in examples:
            if not ex.source or not ex.target:
                continue
            dists, loglik = model.forward(ex.source, ex.target)
            targets = np.asarray(ex.target)
            total_nll -= loglik
            n_tokens += len(targets)
            n_correct += int((np.argmax(dists, axis=-1) == targets).sum())
    if n_tokens == 0:
        return float("nan"), float("nan")
    return math.exp(total_nll / n_tokens), n_correct / n_tokens


def train(model, split: DatasetSplit, cfg: TrainConfig,
          marker_id: Optional[int] = None, log_path=None,
          start_epoch: int = 0) -> List[dict]:
    """Train in place, return per-epoch metric rows, keep the best-valid weights.

    Row 0 (or ``start_epoch``) reports the untrained model's validation
    perplexity/accuracy; subsequent rows add the mean train loss. The model
    ends at the weights of its best validation perplexity.
    """
    model.dropout = cfg.dropout
    model.set_dropout_seed(cfg.seed + 7)
    rng = random.Random(cfg.seed)
    opt = make_optimizer(cfg, d_model=model.d_h)

    if model.kind == "lm":
        train_items = _lm_sequences(split.train, marker_id)
    else:
        train_items = [(ex.source, ex.target) for ex in split.train
                       if ex.source and ex.target]

    def valid_row(epoch, train_loss):
        ppl, acc = evaluate_model(model, split.valid, marker_id)
        return {"epoch": epoch, "train_loss": train_loss,
                "valid_ppl": ppl, "valid_acc": acc}

    rows = [valid_row(start_epoch, None)]
    best_ppl = rows[0]["valid_ppl"]
    best_params = {k: v.copy() for k, v in model.params.items()}

    for epoch in range(start_epoch + 1, start_epoch + cfg.epochs + 1):
        order = list(range(len(train_items)))
        rng.shuffle(order)
        shuffled = [train_items[i] for i in order]
        losses = []
        for batch_idx, batch in enumerate(_batches(shuffled, cfg.batch_size)):
            loss, grads, _ = model.loss_and_grads(batch)
            if not math.isfinite(loss):
                raise NumericFailure(epoch, batch_idx)
            if cfg.grad_clip > 0:
                norm = math.sqrt(sum(float((g * g).sum()) for g in grads.values()))
                if norm > cfg.grad_clip:
                    scale = cfg.grad_clip / norm
                    for g in grads.values():
                        g *= scale
            opt.step(model.params, grads)
            losses.append(loss)
        row = valid_row(epoch, sum(losses) / len(losses) if losses else None)
        rows.append(row)
        if math.isfinite(row["valid_ppl"]) and row["valid_ppl"] < best_ppl:
            best_ppl = row["valid_ppl"]
            best_params = {k: v.copy() for k, v in model.params.items()}

    model.params = best_params
    if log_path is not None:
        with open(log_path, "w", encoding="utf-8") as f:
            for row in rows:
                f.write(json.dumps(row) + "\n")
    return rows
