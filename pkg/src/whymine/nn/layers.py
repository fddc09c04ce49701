"""Array-level building blocks with hand-written backward passes.

Everything operates on (T, B, ...) time-major arrays. Padded positions are
handled by a carry-through mask: at masked steps the recurrent state is
copied forward unchanged, so batched results match per-sequence results
exactly and no gradient leaks into padding.
"""

from __future__ import annotations

import numpy as np

DTYPES = {"high": np.float64, "fast": np.float32}


def sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def log_softmax(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax(logits):
    return np.exp(log_softmax(logits))


def embed_forward(E, ids):
    """ids (T, B) -> (T, B, d); cache is just the ids."""
    return E[ids], ids


def embed_backward(dZ, ids, E_shape, dtype):
    dE = np.zeros(E_shape, dtype=dtype)
    np.add.at(dE, ids, dZ)
    return dE


def lstm_forward(Wx, Wh, b, X, h0, c0, mask=None):
    """Run one LSTM layer over X (T, B, D).

    mask (T, B) of {0,1}: at 0 steps the state is carried through unchanged.
    Returns (H, (h_T, c_T), cache).
    """
    T, B, _ = X.shape
    hidden = Wh.shape[0]
    H = np.empty((T, B, hidden), dtype=X.dtype)
    C = np.empty((T, B, hidden), dtype=X.dtype)
    gates = np.empty((T, B, 4 * hidden), dtype=X.dtype)
    tanh_c = np.empty((T, B, hidden), dtype=X.dtype)

    h, c = h0, c0
    for t in range(T):
        z = X[t] @ Wx + h @ Wh + b
        i = sigmoid(z[:, :hidden])
        f = sigmoid(z[:, hidden:2 * hidden])
        g = np.tanh(z[:, 2 * hidden:3 * hidden])
        o = sigmoid(z[:, 3 * hidden:])
        c_new = f * c + i * g
        tc = np.tanh(c_new)
        h_new = o * tc
        if mask is not None:
            m = mask[t][:, None]
            h_new = m * h_new + (1.0 - m) * h
            c_new = m * c_new + (1.0 - m) * c
        gates[t] = np.concatenate([i, f, g, o], axis=1)
        tanh_c[t] = tc
        H[t] = h_new
        C[t] = c_new
        h, c = h_new, c_new

    cache = {"X": X, "H": H, "C": C, "gates": gates, "tanh_c": tanh_c,
             "h0": h0, "c0": c0, "mask": mask, "Wx": Wx, "Wh": Wh}
    return H, (h, c), cache


def lstm_backward(dH_out, dh_T, dc_T, cache):
    """Backprop through lstm_forward.

    dH_out (T, B, H) is the gradient wrt every step's output; dh_T / dc_T the
    extra gradient flowing into the final state (e.g. from a decoder).
    Returns (dX, dWx, dWh, db, dh0, dc0).
    """
    X, H, C = cache["X"], cache["H"], cache["C"]
    gates, tanh_c, mask = cache["gates"], cache["tanh_c"], cache["mask"]
    Wx, Wh = cache["Wx"], cache["Wh"]
    T, B, hidden = H.shape

    dX = np.zeros_like(X)
    dWx = np.zeros_like(Wx)
    dWh = np.zeros_like(Wh)
    db = np.zeros(4 * hidden, dtype=X.dtype)
    dh_next = dh_T.copy()
    dc_next = dc_T.copy()

    for t in range(T - 1, -1, -1):
        h_prev = cache["h0"] if t == 0 else H[t - 1]
        c_prev = cache["c0"] if t == 0 else C[t - 1]
        i = gates[t][:, :hidden]
        f = gates[t][:, hidden:2 * hidden]
        g = gates[t][:, 2 * hidden:3 * hidden]
        o = gates[t][:, 3 * hidden:]

        dh = dH_out[t] + dh_next
        dc = dc_next
        if mask is not None:
            m = mask[t][:, None]
            dh_carry = dh * (1.0 - m)
            dc_carry = dc * (1.0 - m)
            dh = dh * m
            dc = dc * m
        else:
            dh_carry = 0.0
            dc_carry = 0.0

        tc = tanh_c[t]
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)

        di = dc * g
        dg = dc * i
        df = dc * c_prev
        dc_prev = dc * f

        dz = np.concatenate([
            di * i * (1.0 - i),
            df * f * (1.0 - f),
            dg * (1.0 - g * g),
            do * o * (1.0 - o),
        ], axis=1)

        dWx += X[t].T @ dz
        dWh += h_prev.T @ dz
        db += dz.sum(axis=0)
        dX[t] = dz @ Wx.T
        dh_next = dz @ Wh.T + dh_carry
        dc_next = dc_prev + dc_carry

    return dX, dWx, dWh, db, dh_next, dc_next


def lstm_step(Wx, Wh, b, x, h, c):
    """Single decode-time step for one batch row set; no cache."""
    hidden = Wh.shape[0]
    z = x @ Wx + h @ Wh + b
    i = sigmoid(z[:, :hidden])
    f = sigmoid(z[:, hidden:2 * hidden])
    g = np.tanh(z[:, 2 * hidden:3 * hidden])
    o = sigmoid(z[:, 3 * hidden:])
    c_new = f * c + i * g
    return o * np.tanh(c_new), c_new


def cross_entropy(logits, targets, mask):
    """Mean NLL over masked positions plus the logits gradient.

    logits (T, B, V), targets (T, B) int ids, mask (T, B) in {0,1}.
    Returns (loss, dlogits, total_nll, n_tokens).
    """
    T, B, V = logits.shape
    logp = log_softmax(logits)
    rows = np.arange(T)[:, None], np.arange(B)[None, :], targets
    picked = logp[rows]
    n_tokens = mask.sum()
    if n_tokens == 0:
        return 0.0, np.zeros_like(logits), 0.0, 0
    total_nll = -(picked * mask).sum()
    loss = total_nll / n_tokens

    dlogits = softmax(logits)
    np.subtract.at(dlogits, rows, 1.0)
    dlogits *= (mask / n_tokens)[:, :, None]
    return float(loss), dlogits, float(total_nll), int(n_tokens)


def dropout_forward(X, rate, rng):
    """Inverted dropout; returns (output, mask) with mask None when off."""
    if rate <= 0.0:
        return X, None
    keep = 1.0 - rate
    mask = (rng.random(X.shape) < keep).astype(X.dtype) / keep
    return X * mask, mask


def dropout_backward(dX, mask):
    return dX if mask is None else dX * mask
