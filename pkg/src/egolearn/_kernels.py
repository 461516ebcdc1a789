"""Compiled inner loops for embedding training.

The kernels release the GIL so the parallel (hogwild) mode can run them
from plain threads over shared tables; races may drop updates there.  In
single-thread mode the update sequence is fully deterministic: negatives
come from a splitmix64 stream keyed by (seed, epoch, walk index), and the
learning-rate position of every update is precomputed per walk, so output
never depends on scheduling.

Within one training example all reads happen before any write, which makes
the applied step exactly the analytic gradient of the example's loss (the
same math as the numpy loss kernels in :mod:`egolearn.embedding`).
"""

import numpy as np
from numba import njit

U64 = np.uint64
_PHI = U64(0x9E3779B97F4A7C15)
_MIX1 = U64(0xBF58476D1CE4E5B9)
_MIX2 = U64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


@njit(cache=True, nogil=True, inline="always")
def _mix(z):
    z = (z ^ (z >> U64(30))) * _MIX1
    z = (z ^ (z >> U64(27))) * _MIX2
    return z ^ (z >> U64(31))


@njit(cache=True, nogil=True, inline="always")
def _stream_seed(base, epoch, walk):
    s = _mix(base + _PHI * (U64(epoch) + U64(1)))
    return _mix(s ^ (U64(walk) * _MIX1 + _PHI))


@njit(cache=True, nogil=True, inline="always")
def _next_uniform(state):
    # splitmix64 step; returns (new_state, double in [0, 1))
    state = state + _PHI
    z = _mix(state)
    return state, float(z >> U64(11)) * _INV53


@njit(cache=True, nogil=True, inline="always")
def _sample_index(cum, u):
    # first index with cum[idx] > u (matches searchsorted side='right')
    lo = 0
    hi = cum.shape[0] - 1
    while lo < hi:
        mid = (lo + hi) >> 1
        if cum[mid] > u:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(cache=True, nogil=True, inline="always")
def _sigmoid(x):
    if x >= 0.0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


@njit(cache=True, nogil=True, inline="always")
def _softplus(x):
    # log(1 + e^x) without overflow
    if x > 0.0:
        return x + np.log1p(np.exp(-x))
    return np.log1p(np.exp(x))


@njit(cache=True, nogil=True)
def sgns_train_slice(w_in, w_out, tokens, starts, lengths, lo_walk, hi_walk,
                     pair_prefix, epoch_base, total_updates, lr0, lr1,
                     window, n_neg, cum, seed_base, epoch, loss_out):
    """One epoch of skip-gram negative sampling over walks [lo, hi)."""
    d = w_in.shape[1]
    g_center = np.empty(d)
    neg_ids = np.empty(n_neg, np.int64)
    neg_coef = np.empty(n_neg)
    loss = 0.0
    for w in range(lo_walk, hi_walk):
        state = _stream_seed(seed_base, epoch, w)
        base = starts[w]
        length = lengths[w]
        upd = epoch_base + pair_prefix[w]
        for t in range(length):
            ci = tokens[base + t]
            j0 = t - window
            j1 = t + window
            if j0 < 0:
                j0 = 0
            if j1 > length - 1:
                j1 = length - 1
            for j in range(j0, j1 + 1):
                if j == t:
                    continue
                oi = tokens[base + j]
                lr = lr0 + (lr1 - lr0) * (upd / total_updates)
                upd += 1

                # read phase: dot products and coefficients at old values
                s = 0.0
                for q in range(d):
                    s += w_in[ci, q] * w_out[oi, q]
                pos_coef = _sigmoid(s) - 1.0
                loss += _softplus(-s)
                for q in range(d):
                    g_center[q] = pos_coef * w_out[oi, q]
                for k in range(n_neg):
                    state, u = _next_uniform(state)
                    ni = _sample_index(cum, u)
                    s = 0.0
                    for q in range(d):
                        s += w_in[ci, q] * w_out[ni, q]
                    c = _sigmoid(s)
                    loss += _softplus(s)
                    neg_ids[k] = ni
                    neg_coef[k] = c
                    for q in range(d):
                        g_center[q] += c * w_out[ni, q]

                # write phase: one simultaneous SGD step on the pair loss
                for q in range(d):
                    w_out[oi, q] -= lr * pos_coef * w_in[ci, q]
                for k in range(n_neg):
                    ni = neg_ids[k]
                    c = neg_coef[k]
                    for q in range(d):
                        w_out[ni, q] -= lr * c * w_in[ci, q]
                for q in range(d):
                    w_in[ci, q] -= lr * g_center[q]
    loss_out[0] += loss


@njit(cache=True, nogil=True)
def pvdm_train_slice(ego_vecs, word_vecs, w_out, tokens, starts, lengths, tags,
                     lo_walk, hi_walk, pos_prefix, epoch_base, total_updates,
                     lr0, lr1, context, n_neg, cum, seed_base, epoch, loss_out):
    """One epoch of distributed-memory training with concatenation.

    The predictor is [ego | c left slots | c right slots]; slots past the
    walk boundary are zeroed and receive no gradient.
    """
    d = word_vecs.shape[1]
    n_slots = 2 * context
    width = (n_slots + 1) * d
    h = np.empty(width)
    g_h = np.empty(width)
    slot_tok = np.empty(n_slots, np.int64)
    neg_ids = np.empty(n_neg, np.int64)
    neg_coef = np.empty(n_neg)
    loss = 0.0
    for w in range(lo_walk, hi_walk):
        state = _stream_seed(seed_base, epoch, w)
        base = starts[w]
        length = lengths[w]
        tag = tags[w]
        upd = epoch_base + pos_prefix[w]
        for t in range(length):
            target = tokens[base + t]
            lr = lr0 + (lr1 - lr0) * (upd / total_updates)
            upd += 1

            for q in range(d):
                h[q] = ego_vecs[tag, q]
            slot = 0
            for off in range(-context, context + 1):
                if off == 0:
                    continue
                j = t + off
                b0 = (slot + 1) * d
                if 0 <= j < length:
                    ctok = tokens[base + j]
                    slot_tok[slot] = ctok
                    for q in range(d):
                        h[b0 + q] = word_vecs[ctok, q]
                else:
                    slot_tok[slot] = -1
                    for q in range(d):
                        h[b0 + q] = 0.0
                slot += 1

            # read phase
            s = 0.0
            for q in range(width):
                s += w_out[target, q] * h[q]
            pos_coef = _sigmoid(s) - 1.0
            loss += _softplus(-s)
            for q in range(width):
                g_h[q] = pos_coef * w_out[target, q]
            for k in range(n_neg):
                state, u = _next_uniform(state)
                ni = _sample_index(cum, u)
                s = 0.0
                for q in range(width):
                    s += w_out[ni, q] * h[q]
                c = _sigmoid(s)
                loss += _softplus(s)
                neg_ids[k] = ni
                neg_coef[k] = c
                for q in range(width):
                    g_h[q] += c * w_out[ni, q]

            # write phase
            for q in range(width):
                w_out[target, q] -= lr * pos_coef * h[q]
            for k in range(n_neg):
                ni = neg_ids[k]
                c = neg_coef[k]
                for q in range(width):
                    w_out[ni, q] -= lr * c * h[q]
            for q in range(d):
                ego_vecs[tag, q] -= lr * g_h[q]
            for slot in range(n_slots):
                ctok = slot_tok[slot]
                if ctok >= 0:
                    b0 = (slot + 1) * d
                    for q in range(d):
                        word_vecs[ctok, q] -= lr * g_h[b0 + q]
    loss_out[0] += loss


# Pure-python mirror of the kernel RNG, for tests that replay the exact
# negative draws outside compiled code.

_MASK = (1 << 64) - 1


def _py_mix(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def py_stream_seed(base, epoch, walk):
    s = _py_mix((base + 0x9E3779B97F4A7C15 * (epoch + 1)) & _MASK)
    return _py_mix(s ^ ((walk * 0xBF58476D1CE4E5B9 + 0x9E3779B97F4A7C15) & _MASK))


def py_next_uniform(state):
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = _py_mix(state)
    return state, float(z >> 11) * _INV53
