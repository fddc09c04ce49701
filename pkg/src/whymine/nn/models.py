"""Recurrent language model and encoder-decoder, parameters as numpy arrays.

Both models expose the same three surfaces: whole-sequence forwards that
return per-step distributions and log-likelihood, ``loss_and_grads`` for
training, and an incremental ``decode_start`` / ``decode_step`` pair the
decoders drive. Two precisions: "high" (float64, used by gradient checks
and determinism tests) and "fast" (float32).
"""

from __future__ import annotations

from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..dataset import BOS, PAD
from .layers import (DTYPES, cross_entropy, dropout_backward, dropout_forward,
                     embed_backward, embed_forward, log_softmax, lstm_backward,
                     lstm_forward, lstm_step, softmax)


class OutOfVocabError(ValueError):
    pass


def _check_ids(ids, vocab_size):
    for i in ids:
        if not 0 <= i < vocab_size:
            raise OutOfVocabError(f"token id {i} outside vocabulary of {vocab_size}")


def _pad_batch(seqs: Sequence[Sequence[int]], dtype=np.int64):
    """Right-pad to (T, B) time-major."""
    T = max(len(s) for s in seqs)
    arr = np.full((T, len(seqs)), PAD, dtype=dtype)
    for b, seq in enumerate(seqs):
        arr[:len(seq), b] = seq
    return arr


class _RecurrentBase:
    precision: str
    vocab_size: int
    d_w: int
    d_h: int

    def _uniform(self, rng, *shape):
        scale = self.init_scale
        return rng.uniform(-scale, scale, shape).astype(self.dtype)

    def zero_grads(self) -> Dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.params.items()}

    def set_dropout_seed(self, seed: int) -> None:
        self._drop_rng = np.random.default_rng(seed)

    def _lstm_stack_forward(self, prefix, layers, X, mask, h0c0=None):
        caches = []
        finals = []
        cur = X
        for layer in range(layers):
            if h0c0 is not None:
                h0, c0 = h0c0[layer]
            else:
                h0 = np.zeros((X.shape[1], self.d_h), dtype=self.dtype)
                c0 = np.zeros((X.shape[1], self.d_h), dtype=self.dtype)
            cur, final, cache = lstm_forward(
                self.params[f"{prefix}{layer}_Wx"],
                self.params[f"{prefix}{layer}_Wh"],
                self.params[f"{prefix}{layer}_b"],
                cur, h0, c0, mask)
            caches.append(cache)
            finals.append(final)
        return cur, finals, caches

    def _lstm_stack_backward(self, prefix, caches, dH_top, grads,
                             d_finals=None):
        """Returns gradient wrt the stack input and wrt (h0, c0) per layer."""
        d_cur = dH_top
        d_inits = []
        for layer in range(len(caches) - 1, -1, -1):
            dh_T, dc_T = (d_finals[layer] if d_finals is not None else
                          (np.zeros_like(d_cur[0]),) * 2)
            dX, dWx, dWh, db, dh0, dc0 = lstm_backward(
                d_cur, dh_T, dc_T, caches[layer])
            grads[f"{prefix}{layer}_Wx"] += dWx
            grads[f"{prefix}{layer}_Wh"] += dWh
            grads[f"{prefix}{layer}_b"] += db
            d_inits.append((dh0, dc0))
            d_cur = dX
        d_inits.reverse()
        return d_cur, d_inits

    def _project(self, H):
        return H @ self.params["out_W"] + self.params["out_b"]


class LanguageModel(_RecurrentBase):
    """Next-token LSTM model over a single token stream."""

    kind = "lm"

    def __init__(self, vocab_size: int, d_w: int = 64, d_h: int = 256,
                 layers: int = 1, dropout: float = 0.1, precision: str = "high",
                 seed: int = 0, init_scale: float = 0.1):
        self.vocab_size = vocab_size
        self.d_w = d_w
        self.d_h = d_h
        self.layers = layers
        self.dropout = dropout
        self.precision = precision
        self.dtype = DTYPES[precision]
        self.init_scale = init_scale
        rng = np.random.default_rng(seed)
        self.params: Dict[str, np.ndarray] = {"embed": self._uniform(rng, vocab_size, d_w)}
        for layer in range(layers):
            in_dim = d_w if layer == 0 else d_h
            self.params[f"lstm{layer}_Wx"] = self._uniform(rng, in_dim, 4 * d_h)
            self.params[f"lstm{layer}_Wh"] = self._uniform(rng, d_h, 4 * d_h)
            self.params[f"lstm{layer}_b"] = np.zeros(4 * d_h, dtype=self.dtype)
        self.params["out_W"] = self._uniform(rng, d_h, vocab_size)
        self.params["out_b"] = np.zeros(vocab_size, dtype=self.dtype)
        self._drop_rng = np.random.default_rng(seed + 1)

    def hyper(self) -> dict:
        return {"vocab_size": self.vocab_size, "d_w": self.d_w, "d_h": self.d_h,
                "layers": self.layers, "dropout": self.dropout,
                "precision": self.precision}

    @classmethod
    def from_hyper(cls, hyper: dict) -> "LanguageModel":
        return cls(**hyper, init_scale=0.0)

    def _forward_batch(self, inputs, mask, train):
        X, ids_cache = embed_forward(self.params["embed"], inputs)
        drop0 = None
        if train and self.dropout > 0:
            X, drop0 = dropout_forward(X, self.dropout, self._drop_rng)
        H, _, caches = self._lstm_stack_forward("lstm", self.layers, X, mask)
        drop1 = None
        if train and self.dropout > 0:
            H, drop1 = dropout_forward(H, self.dropout, self._drop_rng)
        logits = self._project(H)
        fwd = {"ids": ids_cache, "caches": caches, "H": H,
               "drop0": drop0, "drop1": drop1}
        return logits, fwd

    def _backward_batch(self, dlogits, fwd, grads):
        H = fwd["H"]
        flatH = H.reshape(-1, self.d_h)
        flatd = dlogits.reshape(-1, self.vocab_size)
        grads["out_W"] += flatH.T @ flatd
        grads["out_b"] += flatd.sum(axis=0)
        dH = dlogits @ self.params["out_W"].T
        dH = dropout_backward(dH, fwd["drop1"])
        dX, _ = self._lstm_stack_backward("lstm", fwd["caches"], dH, grads)
        dX = dropout_backward(dX, fwd["drop0"])
        grads["embed"] += embed_backward(dX, fwd["ids"],
                                         self.params["embed"].shape, self.dtype)

    def forward(self, ids: Sequence[int]):
        """Per-step distributions over the next token and total log-likelihood.

        The first token is the unconditioned seed, so a length-n sequence
        yields n-1 distributions.
        """
        _check_ids(ids, self.vocab_size)
        if len(ids) < 2:
            raise ValueError("need at least 2 tokens to score a sequence")
        arr = np.asarray(ids, dtype=np.int64)[:, None]
        logits, _ = self._forward_batch(arr[:-1], None, train=False)
        logp = log_softmax(logits)[:, 0, :]
        targets = arr[1:, 0]
        loglik = float(logp[np.arange(len(targets)), targets].sum())
        return np.exp(logp), loglik

    def loss_and_grads(self, batch: Sequence[Sequence[int]]):
        """Mean NLL over non-pad next-token targets, with full gradients."""
        if not batch:
            raise ValueError("empty batch")
        for seq in batch:
            _check_ids(seq, self.vocab_size)
        arr = _pad_batch(batch)
        if arr.shape[0] < 2:
            raise ValueError("sequences must have at least 2 tokens")
        inputs, targets = arr[:-1], arr[1:]
        mask = (targets != PAD).astype(self.dtype)
        logits, fwd = self._forward_batch(inputs, mask, train=True)
        loss, dlogits, total_nll, n_tokens = cross_entropy(logits, targets, mask)
        grads = self.zero_grads()
        self._backward_batch(dlogits, fwd, grads)
        return loss, grads, {"total_nll": total_nll, "n_tokens": n_tokens}

    # -- incremental decoding ------------------------------------------------

    def decode_start(self, prompt: Sequence[int]):
        """Consume a non-empty prompt; return (state, log-probs of next token)."""
        _check_ids(prompt, self.vocab_size)
        if not prompt:
            raise ValueError("prompt must be non-empty")
        state = [(np.zeros((1, self.d_h), dtype=self.dtype),
                  np.zeros((1, self.d_h), dtype=self.dtype))
                 for _ in range(self.layers)]
        logp = None
        for tok in prompt:
            state, logp = self.decode_step(state, int(tok))
        return state, logp

    def decode_step(self, state, token: int):
        x = self.params["embed"][token][None, :]
        new_state = []
        for layer in range(self.layers):
            h, c = lstm_step(self.params[f"lstm{layer}_Wx"],
                             self.params[f"lstm{layer}_Wh"],
                             self.params[f"lstm{layer}_b"],
                             x, state[layer][0], state[layer][1])
            new_state.append((h, c))
            x = h
        logits = self._project(x)[0]
        return new_state, log_softmax(logits)


class Seq2SeqModel(_RecurrentBase):
    """LSTM encoder-decoder; the encoder's final state seeds the decoder."""

    kind = "seq2seq"

    def __init__(self, vocab_size: int, d_w: int = 64, d_h: int = 128,
                 layers: int = 1, dropout: float = 0.2,
                 shared_embeddings: bool = True, precision: str = "high",
                 seed: int = 0, init_scale: float = 0.1):
        self.vocab_size = vocab_size
        self.d_w = d_w
        self.d_h = d_h
        self.layers = layers
        self.dropout = dropout
        self.shared_embeddings = shared_embeddings
        self.precision = precision
        self.dtype = DTYPES[precision]
        self.init_scale = init_scale
        rng = np.random.default_rng(seed)
        self.params: Dict[str, np.ndarray] = {"embed": self._uniform(rng, vocab_size, d_w)}
        if not shared_embeddings:
            self.params["dec_embed"] = self._uniform(rng, vocab_size, d_w)
        for prefix in ("enc", "dec"):
            for layer in range(layers):
                in_dim = d_w if layer == 0 else d_h
                self.params[f"{prefix}{layer}_Wx"] = self._uniform(rng, in_dim, 4 * d_h)
                self.params[f"{prefix}{layer}_Wh"] = self._uniform(rng, d_h, 4 * d_h)
                self.params[f"{prefix}{layer}_b"] = np.zeros(4 * d_h, dtype=self.dtype)
        self.params["out_W"] = self._uniform(rng, d_h, vocab_size)
        self.params["out_b"] = np.zeros(vocab_size, dtype=self.dtype)
        self._drop_rng = np.random.default_rng(seed + 1)

    def hyper(self) -> dict:
        return {"vocab_size": self.vocab_size, "d_w": self.d_w, "d_h": self.d_h,
                "layers": self.layers, "dropout": self.dropout,
                "shared_embeddings": self.shared_embeddings,
                "precision": self.precision}

    @classmethod
    def from_hyper(cls, hyper: dict) -> "Seq2SeqModel":
        return cls(**hyper, init_scale=0.0)

    def _dec_embed_matrix(self):
        return self.params["embed" if self.shared_embeddings else "dec_embed"]

    def _forward_batch(self, src, src_mask, dec_in, dec_mask, train):
        Xs, src_ids = embed_forward(self.params["embed"], src)
        drop_s = None
        if train and self.dropout > 0:
            Xs, drop_s = dropout_forward(Xs, self.dropout, self._drop_rng)
        _, enc_finals, enc_caches = self._lstm_stack_forward(
            "enc", self.layers, Xs, src_mask)

        Xd, dec_ids = embed_forward(self._dec_embed_matrix(), dec_in)
        drop_d = None
        if train and self.dropout > 0:
            Xd, drop_d = dropout_forward(Xd, self.dropout, self._drop_rng)
        H, _, dec_caches = self._lstm_stack_forward(
            "dec", self.layers, Xd, dec_mask, h0c0=enc_finals)
        drop_h = None
        if train and self.dropout > 0:
            H, drop_h = dropout_forward(H, self.dropout, self._drop_rng)
        logits = self._project(H)
        fwd = {"src_ids": src_ids, "dec_ids": dec_ids, "enc_caches": enc_caches,
               "dec_caches": dec_caches, "H": H, "drop_s": drop_s,
               "drop_d": drop_d, "drop_h": drop_h}
        return logits, fwd

    def _backward_batch(self, dlogits, fwd, grads):
        H = fwd["H"]
        flatH = H.reshape(-1, self.d_h)
        flatd = dlogits.reshape(-1, self.vocab_size)
        grads["out_W"] += flatH.T @ flatd
        grads["out_b"] += flatd.sum(axis=0)
        dH = dlogits @ self.params["out_W"].T
        dH = dropout_backward(dH, fwd["drop_h"])

        dXd, d_inits = self._lstm_stack_backward("dec", fwd["dec_caches"], dH, grads)
        dXd = dropout_backward(dXd, fwd["drop_d"])
        dec_name = "embed" if self.shared_embeddings else "dec_embed"
        grads[dec_name] += embed_backward(dXd, fwd["dec_ids"],
                                          self._dec_embed_matrix().shape, self.dtype)

        dH_enc = np.zeros_like(fwd["enc_caches"][-1]["H"])
        dXs, _ = self._lstm_stack_backward("enc", fwd["enc_caches"], dH_enc,
                                           grads, d_finals=d_inits)
        dXs = dropout_backward(dXs, fwd["drop_s"])
        grads["embed"] += embed_backward(dXs, fwd["src_ids"],
                                         self.params["embed"].shape, self.dtype)

    def forward(self, source: Sequence[int], target: Sequence[int]):
        """Distributions for each target step plus conditional log-likelihood."""
        _check_ids(source, self.vocab_size)
        _check_ids(target, self.vocab_size)
        if not source or not target:
            raise ValueError("source and target must be non-empty")
        src = np.asarray(source, dtype=np.int64)[:, None]
        dec_in = np.asarray([BOS] + list(target[:-1]), dtype=np.int64)[:, None]
        logits, _ = self._forward_batch(src, None, dec_in, None, train=False)
        logp = log_softmax(logits)[:, 0, :]
        tgt = np.asarray(target)
        loglik = float(logp[np.arange(len(tgt)), tgt].sum())
        return np.exp(logp), loglik

    def loss_and_grads(self, batch: Sequence[Tuple[Sequence[int], Sequence[int]]]):
        """Batch of (source, target) pairs -> (mean NLL, gradients, info)."""
        if not batch:
            raise ValueError("empty batch")
        for src, tgt in batch:
            _check_ids(src, self.vocab_size)
            _check_ids(tgt, self.vocab_size)
            if not src or not tgt:
                raise ValueError("empty source or target in batch")
        src = _pad_batch([s for s, _ in batch])
        targets = _pad_batch([t for _, t in batch])
        dec_in = np.vstack([np.full((1, targets.shape[1]), BOS, dtype=np.int64),
                            targets[:-1]])
        # a padded continuation row never restarts: BOS rows are all real
        src_mask = (src != PAD).astype(self.dtype)
        dec_mask = (targets != PAD).astype(self.dtype)
        logits, fwd = self._forward_batch(src, src_mask, dec_in, dec_mask, train=True)
        loss, dlogits, total_nll, n_tokens = cross_entropy(logits, targets, dec_mask)
        grads = self.zero_grads()
        self._backward_batch(dlogits, fwd, grads)
        return loss, grads, {"total_nll": total_nll, "n_tokens": n_tokens}

    # -- incremental decoding ------------------------------------------------

    def decode_start(self, source: Sequence[int]):
        """Encode the source and consume BOS; returns (state, next log-probs)."""
        _check_ids(source, self.vocab_size)
        if not source:
            raise ValueError("source must be non-empty")
        src = np.asarray(source, dtype=np.int64)[:, None]
        Xs, _ = embed_forward(self.params["embed"], src)
        _, enc_finals, _ = self._lstm_stack_forward("enc", self.layers, Xs, None)
        state = [(h.copy(), c.copy()) for h, c in enc_finals]
        return self.decode_step(state, BOS)

    def decode_step(self, state, token: int):
        x = self._dec_embed_matrix()[token][None, :]
        new_state = []
        for layer in range(self.layers):
            h, c = lstm_step(self.params[f"dec{layer}_Wx"],
                             self.params[f"dec{layer}_Wh"],
                             self.params[f"dec{layer}_b"],
                             x, state[layer][0], state[layer][1])
            new_state.append((h, c))
            x = h
        logits = self._project(x)[0]
        return new_state, log_softmax(logits)


def lm_forward(model: LanguageModel, ids):
    return model.forward(ids)


def seq2seq_forward(model: Seq2SeqModel, source, target):
    return model.forward(source, target)


def loss_and_grads(model, batch):
    return model.loss_and_grads(batch)
