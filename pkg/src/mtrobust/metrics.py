"""BLEU-4 and an exact-match METEOR over tokenized sentences.

Sentence-level BLEU uses add-one smoothing on the 2..4-gram precisions;
corpus BLEU sums clipped counts over all segments and does not smooth.
``meteor_lite`` keeps METEOR's parameterisation (alpha=0.9, beta=3,
gamma=0.5) but only matches identical tokens.
"""

import itertools
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

NGRAM_ORDER = 4

METEOR_ALPHA = 0.9
METEOR_BETA = 3.0
METEOR_GAMMA = 0.5

BLEU = "bleu"
METEOR = "meteor"
KERNELS = (BLEU, METEOR)


class InvalidReferenceError(ValueError):
    pass


@dataclass(frozen=True)
class BleuBreakdown:
    precisions: Tuple[float, ...]
    brevity_penalty: float
    candidate_len: int
    reference_len: int
    score: float


@dataclass(frozen=True)
class MeteorBreakdown:
    matches: int
    chunks: int
    precision: float
    recall: float
    fmean: float
    penalty: float
    score: float


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def ngram_stats(candidate: Sequence[str], reference: Sequence[str]) -> List[Tuple[int, int]]:
    """(clipped matches, candidate n-gram total) for n = 1..4."""
    stats = []
    for n in range(1, NGRAM_ORDER + 1):
        cand = ngrams(candidate, n)
        ref = ngrams(reference, n)
        clipped = sum(min(c, ref[g]) for g, c in cand.items())
        stats.append((clipped, max(len(candidate) - n + 1, 0)))
    return stats


def brevity_penalty(candidate_len: int, reference_len: int) -> float:
    if candidate_len >= reference_len:
        return 1.0
    if candidate_len == 0:
        return 0.0
    return math.exp(1.0 - reference_len / candidate_len)


def _bleu_from_counts(stats, candidate_len, reference_len, smooth) -> BleuBreakdown:
    precisions = []
    for n, (clipped, total) in enumerate(stats, 1):
        if smooth and n >= 2:
            precisions.append((clipped + 1) / (total + 1))
        else:
            precisions.append(clipped / total if total else 0.0)
    bp = brevity_penalty(candidate_len, reference_len)
    if candidate_len == 0 or min(precisions) == 0.0:
        score = 0.0
    else:
        score = 100.0 * bp * math.exp(sum(math.log(p) for p in precisions) / NGRAM_ORDER)
    return BleuBreakdown(tuple(precisions), bp, candidate_len, reference_len, score)


def sentence_bleu(candidate: Sequence[str], reference: Sequence[str],
                  smooth: bool = True) -> BleuBreakdown:
    if not reference:
        raise InvalidReferenceError("empty reference")
    return _bleu_from_counts(ngram_stats(candidate, reference), len(candidate),
                             len(reference), smooth)


def corpus_bleu_breakdown(pairs: Iterable[Tuple[Sequence[str], Sequence[str]]]) -> BleuBreakdown:
    totals = [[0, 0] for _ in range(NGRAM_ORDER)]
    cand_len = ref_len = 0
    n_pairs = 0
    for cand, ref in pairs:
        n_pairs += 1
        cand_len += len(cand)
        ref_len += len(ref)
        for acc, (clipped, total) in zip(totals, ngram_stats(cand, ref)):
            acc[0] += clipped
            acc[1] += total
    if n_pairs == 0:
        raise ValueError("corpus_bleu needs at least one pair")
    if ref_len == 0:
        raise InvalidReferenceError("all references are empty")
    return _bleu_from_counts([tuple(t) for t in totals], cand_len, ref_len, smooth=False)


def corpus_bleu(pairs) -> float:
    return corpus_bleu_breakdown(pairs).score


# -- METEOR ---------------------------------------------------------------------

# Above this many maximal matchings the chunk minimisation goes to a MILP.
MAX_ENUMERATED_MATCHINGS = 5000


def count_chunks(pairs: Iterable[Tuple[int, int]]) -> int:
    """Runs of matches adjacent in both sentences, for a set of (cand, ref) pairs."""
    pairs = set(pairs)
    return sum(1 for i, j in pairs if (i - 1, j - 1) not in pairs)


def _positions(tokens: Sequence[str]) -> Dict[str, List[int]]:
    pos = defaultdict(list)
    for i, tok in enumerate(tokens):
        pos[tok].append(i)
    return pos


def _type_options(cpos: List[int], rpos: List[int]) -> List[List[Tuple[int, int]]]:
    """Every injective pairing of one token type that matches min(|cpos|, |rpos|) tokens."""
    if len(cpos) <= len(rpos):
        return [list(zip(cpos, perm)) for perm in itertools.permutations(rpos, len(cpos))]
    return [list(zip(perm, rpos)) for perm in itertools.permutations(cpos, len(rpos))]


def _min_chunks_milp(candidate, reference, n_matches) -> int:
    import numpy as np
    from scipy.optimize import Bounds, LinearConstraint, milp

    pairs = [(i, j) for i, c in enumerate(candidate) for j, r in enumerate(reference) if c == r]
    index = {p: k for k, p in enumerate(pairs)}
    links = [(index[(i, j)], index[(i + 1, j + 1)]) for (i, j) in pairs if (i + 1, j + 1) in index]
    nx, nz = len(pairs), len(links)
    rows, lower, upper = [], [], []

    def add(coeffs, lo, hi):
        row = np.zeros(nx + nz)
        for k, v in coeffs:
            row[k] = v
        rows.append(row)
        lower.append(lo)
        upper.append(hi)

    for i in range(len(candidate)):
        ks = [index[p] for p in pairs if p[0] == i]
        if len(ks) > 1:
            add([(k, 1) for k in ks], 0, 1)
    for j in range(len(reference)):
        ks = [index[p] for p in pairs if p[1] == j]
        if len(ks) > 1:
            add([(k, 1) for k in ks], 0, 1)
    add([(k, 1) for k in range(nx)], n_matches, n_matches)
    for z, (a, b) in enumerate(links):
        add([(nx + z, 1), (a, -1)], -np.inf, 0)
        add([(nx + z, 1), (b, -1)], -np.inf, 0)
    c = np.concatenate([np.zeros(nx), -np.ones(nz)])
    res = milp(c, constraints=LinearConstraint(np.array(rows), lower, upper),
               integrality=np.ones(nx + nz), bounds=Bounds(0, 1))
    if not res.success:
        raise RuntimeError(f"chunk minimisation failed: {res.message}")
    return n_matches - int(round(-res.fun))


def align_unigrams(candidate: Sequence[str], reference: Sequence[str],
                   max_enumerated: int = MAX_ENUMERATED_MATCHINGS) -> Tuple[int, int]:
    """(matches, chunks) of the maximum exact matching with fewest chunks."""
    cpos, rpos = _positions(candidate), _positions(reference)
    shared = [t for t in cpos if t in rpos]
    n_matches = sum(min(len(cpos[t]), len(rpos[t])) for t in shared)
    if n_matches == 0:
        return 0, 0
    n_options = 1
    for t in shared:
        a, b = len(cpos[t]), len(rpos[t])
        n_options *= math.perm(max(a, b), min(a, b))
    if n_options > max_enumerated:
        return n_matches, _min_chunks_milp(candidate, reference, n_matches)
    best = None
    for combo in itertools.product(*(_type_options(cpos[t], rpos[t]) for t in shared)):
        chunks = count_chunks(p for group in combo for p in group)
        if best is None or chunks < best:
            best = chunks
            if best == 1:
                break
    return n_matches, best


def _meteor_from_counts(matches, chunks, cand_len, ref_len) -> MeteorBreakdown:
    if matches == 0:
        return MeteorBreakdown(0, 0, 0.0, 0.0, 0.0, 0.0, 0.0)
    p = matches / cand_len
    r = matches / ref_len
    fmean = p * r / (METEOR_ALPHA * p + (1 - METEOR_ALPHA) * r)
    penalty = METEOR_GAMMA * (chunks / matches) ** METEOR_BETA
    return MeteorBreakdown(matches, chunks, p, r, fmean, penalty, 100.0 * fmean * (1 - penalty))


def meteor_lite(candidate: Sequence[str], reference: Sequence[str]) -> MeteorBreakdown:
    matches, chunks = align_unigrams(candidate, reference)
    return _meteor_from_counts(matches, chunks, len(candidate), len(reference))


def corpus_meteor(pairs) -> float:
    """Corpus METEOR from summed matches, chunks and lengths over all segments."""
    matches = chunks = cand_len = ref_len = 0
    n_pairs = 0
    for cand, ref in pairs:
        n_pairs += 1
        m, ch = align_unigrams(cand, ref)
        matches += m
        chunks += ch
        cand_len += len(cand)
        ref_len += len(ref)
    if n_pairs == 0:
        raise ValueError("corpus_meteor needs at least one pair")
    return _meteor_from_counts(matches, chunks, cand_len, ref_len).score


def sentence_score(candidate, reference, kernel: str = BLEU) -> float:
    if kernel == BLEU:
        return sentence_bleu(candidate, reference).score
    if kernel == METEOR:
        return meteor_lite(candidate, reference).score
    raise ValueError(f"unknown kernel {kernel!r}")


def corpus_score(pairs, kernel: str = BLEU) -> float:
    if kernel == BLEU:
        return corpus_bleu(pairs)
    if kernel == METEOR:
        return corpus_meteor(pairs)
    raise ValueError(f"unknown kernel {kernel!r}")


def distance(a: Sequence[str], b: Sequence[str], kernel: str = BLEU) -> float:
    """100 minus the kernel score of ``a`` against reference ``b``."""
    return 100.0 - sentence_score(a, b, kernel)
