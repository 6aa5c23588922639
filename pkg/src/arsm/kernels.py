"""Hot numeric kernels with a numba path and a pure-numpy reference path.

Both implementations of every kernel are importable (``*_numpy`` / ``*_numba``)
so tests and ``benchmarks/bench_kernels.py`` can compare them; the unsuffixed
name is bound to whichever backend :mod:`arsm._accel` selected.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import USE_NUMBA, njit

LOG_FLOOR = 1e-12


# -- decision head objective ---------------------------------------------------


def _softmax_rows(Z: np.ndarray) -> np.ndarray:
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def batch_objective_numpy(X, Xadv, y, t, U, W, b, wr, br, weights):
    """Mean loss components and parameter gradients over one batch.

    Returns ``(components, gW, gb, gwr, gbr)`` where ``components`` holds the
    batch means of (accuracy, robustness, refusal, consistency) losses and the
    gradients are those of ``weights @ components``.
    """
    alpha, beta, gamma, delta = weights
    B = X.shape[0]
    P = _softmax_rows(X @ W.T + b)
    Q = _softmax_rows(Xadv @ W.T + b)
    rows = np.arange(B)

    logP = np.log(np.maximum(P, LOG_FLOOR))
    logQ = np.log(np.maximum(Q, LOG_FLOOR))
    l_acc = -logP[rows, y]
    A = logP - logQ
    kl = (P * A).sum(axis=1)
    s = X @ wr + br
    r = 1.0 / (1.0 + np.exp(-s))
    l_sec = -(t * np.log(np.maximum(r, LOG_FLOOR)) + (1.0 - t) * np.log(np.maximum(1.0 - r, LOG_FLOOR)))
    l_cons = (P * U).sum(axis=1)

    onehot = np.zeros_like(P)
    onehot[rows, y] = 1.0
    gZ = alpha * (P - onehot) + beta * P * (A - kl[:, None]) + delta * P * (U - l_cons[:, None])
    gZadv = beta * (Q - P)
    gs = gamma * (r - t)

    gW = (gZ.T @ X + gZadv.T @ Xadv) / B
    gb = (gZ.sum(axis=0) + gZadv.sum(axis=0)) / B
    gwr = (X.T @ gs) / B
    gbr = gs.sum() / B
    comps = np.array([l_acc.mean(), kl.mean(), l_sec.mean(), l_cons.mean()])
    return comps, gW, gb, gwr, gbr


def _batch_objective_loops(X, Xadv, y, t, U, W, b, wr, br, weights):
    alpha = weights[0]
    beta = weights[1]
    gamma = weights[2]
    delta = weights[3]
    B, d = X.shape
    C = W.shape[0]
    gW = np.zeros((C, d))
    gb = np.zeros(C)
    gwr = np.zeros(d)
    gbr = 0.0
    comps = np.zeros(4)
    z = np.empty(C)
    za = np.empty(C)
    p = np.empty(C)
    q = np.empty(C)
    gz = np.empty(C)
    gza = np.empty(C)
    for i in range(B):
        for c in range(C):
            acc = b[c]
            acc2 = b[c]
            for j in range(d):
                acc += W[c, j] * X[i, j]
                acc2 += W[c, j] * Xadv[i, j]
            z[c] = acc
            za[c] = acc2
        zmax = z[0]
        zamax = za[0]
        for c in range(1, C):
            if z[c] > zmax:
                zmax = z[c]
            if za[c] > zamax:
                zamax = za[c]
        sp = 0.0
        sq = 0.0
        for c in range(C):
            p[c] = math.exp(z[c] - zmax)
            q[c] = math.exp(za[c] - zamax)
            sp += p[c]
            sq += q[c]
        kl = 0.0
        lc = 0.0
        for c in range(C):
            p[c] /= sp
            q[c] /= sq
            a = math.log(max(p[c], 1e-12)) - math.log(max(q[c], 1e-12))
            kl += p[c] * a
            lc += p[c] * U[i, c]
        yi = y[i]
        comps[0] += -math.log(max(p[yi], 1e-12))
        comps[1] += kl
        comps[3] += lc
        for c in range(C):
            a = math.log(max(p[c], 1e-12)) - math.log(max(q[c], 1e-12))
            g = beta * p[c] * (a - kl) + delta * p[c] * (U[i, c] - lc)
            g += alpha * p[c]
            if c == yi:
                g -= alpha
            gz[c] = g
            gza[c] = beta * (q[c] - p[c])
        s = br
        for j in range(d):
            s += wr[j] * X[i, j]
        r = 1.0 / (1.0 + math.exp(-s))
        ti = t[i]
        comps[2] += -(ti * math.log(max(r, 1e-12)) + (1.0 - ti) * math.log(max(1.0 - r, 1e-12)))
        gs = gamma * (r - ti)
        for c in range(C):
            gb[c] += gz[c] + gza[c]
            for j in range(d):
                gW[c, j] += gz[c] * X[i, j] + gza[c] * Xadv[i, j]
        for j in range(d):
            gwr[j] += gs * X[i, j]
        gbr += gs
    inv = 1.0 / B
    return comps * inv, gW * inv, gb * inv, gwr * inv, gbr * inv


batch_objective_numba = njit(_batch_objective_loops)


# -- input gradient for the normalized-gradient attack ---------------------------


def input_grad_numpy(X, y, W, b):
    """Rows of d(cross-entropy)/dx for a linear-softmax head: (p - onehot) @ W."""
    P = _softmax_rows(X @ W.T + b)
    P[np.arange(X.shape[0]), y] -= 1.0
    return P @ W


def _input_grad_loops(X, y, W, b):
    B, d = X.shape
    C = W.shape[0]
    G = np.zeros((B, d))
    z = np.empty(C)
    for i in range(B):
        # row views keep the inner loops contiguous so LLVM vectorizes them
        xi = X[i]
        gi = G[i]
        for c in range(C):
            wc = W[c]
            acc = 0.0
            for j in range(d):
                acc += wc[j] * xi[j]
            z[c] = acc + b[c]
        zmax = z.max()
        tot = 0.0
        for c in range(C):
            z[c] = math.exp(z[c] - zmax)
            tot += z[c]
        for c in range(C):
            g = z[c] / tot
            if c == y[i]:
                g -= 1.0
            wc = W[c]
            for j in range(d):
                gi[j] += g * wc[j]
    return G


input_grad_numba = njit(_input_grad_loops)


# -- evidence scoring ------------------------------------------------------------


def pairwise_mean_sim_numpy(V):
    """For each row, mean of max(0, cosine) against every other row (1.0 for a single row)."""
    k = V.shape[0]
    if k == 1:
        return np.ones(1)
    norms = np.sqrt((V * V).sum(axis=1))
    safe = np.where(norms > 0.0, norms, 1.0)
    Un = V / safe[:, None]
    S = np.maximum(Un @ Un.T, 0.0)
    S[norms == 0.0, :] = 0.0
    S[:, norms == 0.0] = 0.0
    np.fill_diagonal(S, 0.0)
    return np.minimum(S.sum(axis=1) / (k - 1), 1.0)


def _pairwise_mean_sim_loops(V):
    k, d = V.shape
    out = np.ones(k)
    if k == 1:
        return out
    norms = np.zeros(k)
    for i in range(k):
        acc = 0.0
        for j in range(d):
            acc += V[i, j] * V[i, j]
        norms[i] = math.sqrt(acc)
    for i in range(k):
        tot = 0.0
        for o in range(k):
            if o == i or norms[i] == 0.0 or norms[o] == 0.0:
                continue
            dot = 0.0
            for j in range(d):
                dot += V[i, j] * V[o, j]
            c = dot / (norms[i] * norms[o])
            if c > 0.0:
                tot += c
        out[i] = min(tot / (k - 1), 1.0)
    return out


pairwise_mean_sim_numba = njit(_pairwise_mean_sim_loops)


def modified_sim_scan_numpy(x, E, match, lam):
    """Literal-match-augmented cosine of ``x`` against every row of ``E``.

    Negative dot products are clamped to zero before the formula is applied.
    """
    dots = np.maximum(E @ x, 0.0)
    denom = np.sqrt((E * E).sum(axis=1)) * math.sqrt(float(x @ x)) + lam
    out = np.zeros(E.shape[0])
    ok = denom > 0.0
    out[ok] = (dots[ok] + lam * match[ok]) / denom[ok]
    return out


def _modified_sim_scan_loops(x, E, match, lam):
    n, d = E.shape
    xn = 0.0
    for j in range(d):
        xn += x[j] * x[j]
    xn = math.sqrt(xn)
    out = np.zeros(n)
    for i in range(n):
        dot = 0.0
        en = 0.0
        for j in range(d):
            dot += E[i, j] * x[j]
            en += E[i, j] * E[i, j]
        if dot < 0.0:
            dot = 0.0
        denom = math.sqrt(en) * xn + lam
        if denom > 0.0:
            out[i] = (dot + lam * match[i]) / denom
    return out


modified_sim_scan_numba = njit(_modified_sim_scan_loops)


if USE_NUMBA:
    batch_objective = batch_objective_numba
    input_grad = input_grad_numba
    pairwise_mean_sim = pairwise_mean_sim_numba
    modified_sim_scan = modified_sim_scan_numba
else:
    batch_objective = batch_objective_numpy
    input_grad = input_grad_numpy
    pairwise_mean_sim = pairwise_mean_sim_numpy
    modified_sim_scan = modified_sim_scan_numpy
