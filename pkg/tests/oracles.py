"""Independent reference implementations used as test oracles.

Everything here is written against the gate equations directly in plain
scalar arithmetic (or, for the finite-difference checker, against the loss
as a black box), deliberately sharing no code with the package's forward
paths.
"""

from __future__ import annotations

import math

import numpy as np


def sig(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


def scalar_lstm_step(x, h, c, w):
    """One LSTM step with 1-d states. ``w`` maps gate name -> (wx, wh, b)."""
    def gate(name, squash):
        wx, wh, b = w[name]
        return squash(wx * x + wh * h + b)

    i = gate("i", sig)
    f = gate("f", sig)
    o = gate("o", sig)
    u = gate("u", math.tanh)
    c2 = i * u + f * c
    h2 = o * math.tanh(c2)
    return h2, c2


def scalar_lstm_run(xs, w):
    h = c = 0.0
    for x in xs:
        h, c = scalar_lstm_step(x, h, c, w)
    return h, c


def scalar_tree_node(hl, cl, hr, cr, rl, rr, w):
    """One binary tree-cell step with 1-d states.

    ``w`` maps gate name in {i, fl, fr, o, u} -> (w_hl, w_hr, w_rl, w_rr, b).
    """
    def gate(name, squash):
        whl, whr, wrl, wrr, b = w[name]
        return squash(whl * hl + whr * hr + wrl * rl + wrr * rr + b)

    i = gate("i", sig)
    fl = gate("fl", sig)
    fr = gate("fr", sig)
    o = gate("o", sig)
    u = gate("u", math.tanh)
    c = i * u + fl * cl + fr * cr
    h = o * math.tanh(c)
    return h, c


def scalar_parseq(paragraph_tokens, token_values, w1, w2, w3):
    """Three stacked scalar LSTMs: words -> sentence -> paragraph -> document."""
    para_vecs = []
    for paragraph in paragraph_tokens:
        sent_vecs = []
        for sentence in paragraph:
            h, _ = scalar_lstm_run([token_values[t] for t in sentence], w1)
            sent_vecs.append(h)
        h, _ = scalar_lstm_run(sent_vecs, w2)
        para_vecs.append(h)
    d, _ = scalar_lstm_run(para_vecs, w3)
    return d


def scalar_adam_unroll(theta, grads, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """Hand-unrolled bias-corrected Adam over a scalar parameter."""
    m = v = 0.0
    for t, g in enumerate(grads, start=1):
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1 ** t)
        v_hat = v / (1 - beta2 ** t)
        theta = theta - lr * m_hat / (math.sqrt(v_hat) + eps)
    return theta


# --- finite differences -------------------------------------------------------

FD_STEP = 1e-5
FD_REL_TOL = 1e-4
# below this magnitude the FD estimate is noise-dominated; require absolute
# agreement at the central-difference noise floor instead
FD_TINY = 1e-5
FD_ABS_TOL = 1e-9


def finite_difference_gradients(loss_fn, bundle, step=FD_STEP):
    """Central-difference d(loss)/d(theta) for every bundle entry."""
    grads = {}
    for name, tensor in bundle.items():
        flat = tensor.data.ravel()
        g = np.zeros_like(flat)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + step
            up = loss_fn()
            flat[j] = orig - step
            down = loss_fn()
            flat[j] = orig
            g[j] = (up - down) / (2.0 * step)
        grads[name] = g.reshape(tensor.data.shape)
    return grads


def gradient_mismatches(analytic, numeric, rel_tol=FD_REL_TOL,
                        tiny=FD_TINY, abs_tol=FD_ABS_TOL):
    """Entries where analytic and FD gradients disagree.

    Relative error is checked where either magnitude exceeds ``tiny``;
    smaller entries must agree within the FD noise floor ``abs_tol``.
    """
    bad = []
    for name in analytic:
        a = analytic[name].ravel()
        f = numeric[name].ravel()
        for j in range(a.size):
            scale = max(abs(a[j]), abs(f[j]))
            diff = abs(a[j] - f[j])
            if scale >= tiny:
                if diff / scale >= rel_tol:
                    bad.append((name, j, a[j], f[j], diff / scale))
            elif diff >= abs_tol:
                bad.append((name, j, a[j], f[j], diff))
    return bad


# --- generator calibration ----------------------------------------------------


def label_histogram_centroid_accuracy(train_docs, test_docs, label_space,
                                      labels_of) -> float:
    """Nearest-centroid classification on per-document label histograms."""
    index = {lab: k for k, lab in enumerate(label_space)}

    def hist(doc):
        h = np.zeros(len(index))
        for lab in labels_of(doc):
            h[index[lab]] += 1.0
        total = h.sum()
        return h / total if total else h

    centroids = {}
    for klass in (1, 2, 3):
        rows = [hist(d) for d in train_docs if d.label == klass]
        centroids[klass] = np.mean(rows, axis=0) if rows else np.zeros(len(index))
    correct = 0
    for doc in test_docs:
        h = hist(doc)
        pred = min(centroids, key=lambda k: float(np.sum((h - centroids[k]) ** 2)))
        correct += int(pred == doc.label)
    return correct / len(test_docs)
