"""Independent reference implementations used as test oracles.

Written in plain Python loops from the formulas, sharing no code with the
package beyond the data types.
"""

import itertools
import math


def dot(a, b):
    return sum(float(x) * float(y) for x, y in zip(a, b))


def norm(a):
    return math.sqrt(dot(a, a))


def jaccard(a, b):
    a, b = set(a), set(b)
    return len(a & b) / len(a | b) if a | b else 0.0


def modified_sim(x, q_tokens, vec, tokens, lam):
    den = norm(x) * norm(vec) + lam
    if den == 0.0:
        return 0.0
    return (max(dot(x, vec), 0.0) + lam * jaccard(q_tokens, tokens)) / den


def topk(records, x, q_tokens, k, lam):
    scored = [(modified_sim(x, q_tokens, r.vector, r.tokens, lam), r.id, r) for r in records]
    scored.sort(key=lambda s: (-round(s[0], 12), s[1]))
    return [r for _, _, r in scored[:k]]


def consistency(entity_ids, relations, edges, exclusive):
    """Enumerate all ordered pairs (i, j), i != j, of the output entities.

    ``edges`` maps frozenset pairs to labels; ``relations`` is a set of
    (head, tail, label); ``exclusive`` a set of frozenset label pairs.
    Returns (c_pairs, c_edge).
    """
    ents = sorted(entity_ids)
    n = len(ents)
    if n <= 1:
        return 1.0, 1.0
    num = 0
    adjacent = 0
    for i in ents:
        for j in ents:
            if i == j:
                continue
            actual = edges.get(frozenset((i, j)))
            if actual is None:
                continue
            adjacent += 1
            asserted = [lbl for h, t, lbl in relations if {h, t} == {i, j}]
            ok = all(frozenset((lbl, actual)) not in exclusive for lbl in asserted)
            num += 1 if ok else 0
    return num / (n * n), (num / adjacent if adjacent else 1.0)


def softmax(z):
    m = max(z)
    e = [math.exp(v - m) for v in z]
    s = sum(e)
    return [v / s for v in e]


def plain_sgd(X, y, C, lr, epochs, batch_size, weight_decay, perms):
    """Mini-batch cross-entropy SGD with cosine-annealed step and L2 decay on W.

    ``perms[e]`` is the sample order of epoch ``e``. Returns (W, b) as lists.
    """
    n, d = len(X), len(X[0])
    W = [[0.0] * d for _ in range(C)]
    b = [0.0] * C
    for e in range(epochs):
        step = lr * (1.0 + math.cos(math.pi * e / epochs)) / 2.0
        order = perms[e]
        for s in range(0, n, batch_size):
            idx = order[s : s + batch_size]
            gW = [[0.0] * d for _ in range(C)]
            gb = [0.0] * C
            for i in idx:
                p = softmax([dot(W[c], X[i]) + b[c] for c in range(C)])
                for c in range(C):
                    r = p[c] - (1.0 if c == y[i] else 0.0)
                    gb[c] += r / len(idx)
                    for j in range(d):
                        gW[c][j] += r * X[i][j] / len(idx)
            for c in range(C):
                for j in range(d):
                    W[c][j] -= step * (gW[c][j] + weight_decay * W[c][j])
                b[c] -= step * gb[c]
    return W, b


def central_differences(f, theta, h=1e-5):
    """Numerical gradient of ``f(theta)`` over W, b, w_ref and b_ref by central differences."""
    out = {}
    for name in ("W", "b", "w_ref"):
        arr = getattr(theta, name)
        g = arr.copy()
        for idx in itertools.product(*map(range, arr.shape)):
            keep = arr[idx]
            arr[idx] = keep + h
            up = f(theta)
            arr[idx] = keep - h
            down = f(theta)
            arr[idx] = keep
            g[idx] = (up - down) / (2 * h)
        out[name] = g
    keep = theta.b_ref
    theta.b_ref = keep + h
    up = f(theta)
    theta.b_ref = keep - h
    down = f(theta)
    theta.b_ref = keep
    out["b_ref"] = (up - down) / (2 * h)
    return out
