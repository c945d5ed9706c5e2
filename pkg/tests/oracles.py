"""Brute-force reference computations, written independently of the package."""

import math
from fractions import Fraction

import numpy as np
from scipy import stats as sstats


def _grams(tokens, n):
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def bleu(candidate, reference, smooth=True):
    """Score by exhaustive n-gram counting with exact fractions."""
    candidate, reference = list(candidate), list(reference)
    if not candidate:
        return 0.0
    precisions = []
    for n in range(1, 5):
        cg, rg = _grams(candidate, n), _grams(reference, n)
        clipped = 0
        for g in set(cg):
            clipped += min(cg.count(g), rg.count(g))
        if smooth and n > 1:
            precisions.append(Fraction(clipped + 1, len(cg) + 1))
        else:
            precisions.append(Fraction(clipped, len(cg)) if cg else Fraction(0))
    if any(p == 0 for p in precisions):
        return 0.0
    c, r = len(candidate), len(reference)
    bp = 1.0 if c >= r else math.exp(1 - r / c)
    prod = precisions[0] * precisions[1] * precisions[2] * precisions[3]
    return 100 * bp * float(prod) ** 0.25


def corpus_bleu(pairs):
    matches = [0] * 4
    totals = [0] * 4
    c = r = 0
    for cand, ref in pairs:
        cand, ref = list(cand), list(ref)
        c += len(cand)
        r += len(ref)
        for n in range(1, 5):
            cg, rg = _grams(cand, n), _grams(ref, n)
            totals[n - 1] += len(cg)
            matches[n - 1] += sum(min(cg.count(g), rg.count(g)) for g in set(cg))
    if min(matches) == 0:
        return 0.0
    prod = Fraction(1)
    for m, t in zip(matches, totals):
        prod *= Fraction(m, t)
    bp = 1.0 if c >= r else math.exp(1 - r / c)
    return 100 * bp * float(prod) ** 0.25


def _chunks(pairs):
    pairs = sorted(pairs)
    chunks = 0
    prev = None
    for i, j in pairs:
        if prev is None or (i, j) != (prev[0] + 1, prev[1] + 1):
            chunks += 1
        prev = (i, j)
    return chunks


def meteor_matching(candidate, reference):
    """(matches, chunks) over every partial matching of identical tokens."""
    best = [0, 0]

    def rec(i, used, pairs):
        if i == len(candidate):
            m, ch = len(pairs), _chunks(pairs)
            if m > best[0] or (m == best[0] and ch < best[1]):
                best[0], best[1] = m, ch
            return
        rec(i + 1, used, pairs)
        for j, tok in enumerate(reference):
            if tok == candidate[i] and j not in used:
                rec(i + 1, used | {j}, pairs + [(i, j)])

    rec(0, frozenset(), [])
    return tuple(best)


def meteor(candidate, reference):
    m, ch = meteor_matching(list(candidate), list(reference))
    if m == 0:
        return 0.0
    p, r = m / len(candidate), m / len(reference)
    fmean = p * r / (0.9 * p + 0.1 * r)
    return 100 * fmean * (1 - 0.5 * (ch / m) ** 3)


def moments(counts):
    """mu, sigma, gamma1 of the expanded value list (population moments)."""
    values = np.array([o for o, c in counts.items() for _ in range(c)], dtype=float)
    mu = float(values.mean())
    sigma = float(values.std())
    gamma1 = float(sstats.skew(values, bias=True)) if sigma > 0 and len(values) > 1 else None
    return mu, sigma, gamma1


def ibm1_dense(bitext, iterations):
    """Dense-matrix Model 1 EM; returns {source: {target: p}} with None as NULL."""
    src_vocab = sorted({w for s, _ in bitext for w in s})
    tgt_vocab = sorted({w for _, t in bitext for w in t})
    e_index = {None: 0, **{w: k + 1 for k, w in enumerate(src_vocab)}}
    f_index = {w: k for k, w in enumerate(tgt_vocab)}
    mask = np.zeros((len(e_index), len(f_index)))
    for s, t in bitext:
        for e in [None] + list(s):
            for f in t:
                mask[e_index[e], f_index[f]] = 1
    table = mask / mask.sum(axis=1, keepdims=True)
    for _ in range(iterations):
        counts = np.zeros_like(table)
        for s, t in bitext:
            es = [e_index[e] for e in [None] + list(s)]
            for f in t:
                col = table[es, f_index[f]]
                z = col.sum()
                for e_i, p in zip(es, col):
                    counts[e_i, f_index[f]] += p / z
        table = counts / counts.sum(axis=1, keepdims=True)
    names = {k: w for w, k in e_index.items()}
    return {names[i]: {f: table[i, k] for f, k in f_index.items() if mask[i, k]}
            for i in range(len(e_index))}
