"""IBM Model 1 lexical translation tables and Viterbi word alignment.

Probabilities are t(target | source) with a NULL source word.  Training
is plain EM; expected counts are collected per sentence pair and merged
in corpus order, so the table does not depend on the worker count.
"""

import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .corpus_io import Quadruple, Sentence

NULL = None
NULL_NAME = "NULL"
PROB_FLOOR = 1e-12
DEFAULT_ITERATIONS = 5

Alignment = Tuple[Optional[int], ...]


class AlignmentFormatError(ValueError):
    pass


@dataclass
class TranslationTable:
    probs: Dict[Optional[str], Dict[str, float]]
    log_likelihood: List[float] = field(default_factory=list)
    iterations: int = 0

    def prob(self, target: str, source: Optional[str]) -> float:
        return self.probs.get(source, {}).get(target, PROB_FLOOR)

    def row_sums(self) -> Dict[Optional[str], float]:
        return {e: math.fsum(row.values()) for e, row in self.probs.items()}

    @property
    def source_vocab(self) -> List[str]:
        return sorted(e for e in self.probs if e is not NULL)

    @property
    def target_vocab(self) -> List[str]:
        return sorted({f for row in self.probs.values() for f in row})

    def dump(self) -> str:
        """One "source target probability" line per entry, sorted."""
        lines = []
        for e in sorted(self.probs, key=lambda s: (s is not NULL, s or "")):
            name = NULL_NAME if e is NULL else e
            for f in sorted(self.probs[e]):
                lines.append(f"{name} {f} {self.probs[e][f]!r}")
        return "\n".join(lines) + ("\n" if lines else "")


def _pair_counts(t, source: Sentence, target: Sentence):
    """Expected link counts and log-likelihood contribution of one pair."""
    src = (NULL,) + tuple(source)
    norm = math.log(len(src))
    counts: Dict[Optional[str], Dict[str, float]] = defaultdict(lambda: defaultdict(float))
    ll = 0.0
    for f in target:
        z = math.fsum(t[e][f] for e in src)
        ll += math.log(z) - norm
        for e in src:
            counts[e][f] += t[e][f] / z
    return counts, ll


def train_ibm1(bitext: Sequence[Tuple[Sentence, Sentence]],
               iterations: int = DEFAULT_ITERATIONS,
               threads: int = 1,
               on_iteration: Optional[Callable[[int, TranslationTable], None]] = None
               ) -> TranslationTable:
    """EM training; ``log_likelihood[k]`` is the corpus log-likelihood under
    the table after k iterations (entry 0 is the uniform initialisation)."""
    if not bitext:
        raise ValueError("empty bitext")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    cooc: Dict[Optional[str], set] = defaultdict(set)
    for source, target in bitext:
        for e in (NULL,) + tuple(source):
            cooc[e].update(target)
    t = {e: {f: 1.0 / len(fs) for f in sorted(fs)} for e, fs in cooc.items() if fs}
    table = TranslationTable(t)
    pairs = [(s, tg) for s, tg in bitext if tg]

    for it in range(1, iterations + 1):
        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                partials = list(pool.map(lambda p: _pair_counts(t, *p), pairs))
        else:
            partials = [_pair_counts(t, s, tg) for s, tg in pairs]
        totals: Dict[Optional[str], Dict[str, float]] = defaultdict(lambda: defaultdict(float))
        ll = []
        for counts, pair_ll in partials:
            ll.append(pair_ll)
            for e, row in counts.items():
                acc = totals[e]
                for f, c in row.items():
                    acc[f] += c
        table.log_likelihood.append(math.fsum(ll))
        t = {}
        for e, row in totals.items():
            z = math.fsum(row.values())
            t[e] = {f: c / z for f, c in row.items()}
        # Sources whose targets were all empty keep their previous row.
        for e, row in table.probs.items():
            t.setdefault(e, row)
        table = TranslationTable(t, table.log_likelihood, it)
        if on_iteration is not None:
            on_iteration(it, table)
    final = [_pair_counts(t, s, tg)[1] for s, tg in pairs]
    table.log_likelihood.append(math.fsum(final))
    return table


def viterbi_align(table: TranslationTable, source: Sentence, target: Sentence) -> Alignment:
    """Most probable source index per target token; None means NULL.

    Ties prefer a real source word, then the smallest index.
    """
    links = []
    for f in target:
        best, best_p = None, -1.0
        for i, e in enumerate(source):
            p = table.prob(f, e)
            if p > best_p:
                best, best_p = i, p
        if table.prob(f, NULL) > best_p:
            best = None
        links.append(best)
    return tuple(links)


def align_corpus(qs: Sequence[Quadruple], iterations: int = DEFAULT_ITERATIONS,
                 threads: int = 1) -> Tuple[TranslationTable, List[Tuple[Alignment, Alignment]]]:
    """Train one table on all (x, y) and (x~, y~) pairs and align both sides."""
    if not qs:
        raise ValueError("align_corpus of an empty set")
    bitext = []
    for q in qs:
        bitext.append((q.x, q.y))
        bitext.append((q.x_tilde, q.y_tilde))
    table = train_ibm1(bitext, iterations, threads)
    out = [(viterbi_align(table, q.x, q.y), viterbi_align(table, q.x_tilde, q.y_tilde))
           for q in qs]
    return table, out


# -- Pharaoh "i-j" format ------------------------------------------------------------

def format_pharaoh(alignment: Alignment) -> str:
    return " ".join(f"{i}-{j}" for j, i in enumerate(alignment) if i is not None)


def parse_pharaoh(line: str, source_len: int, target_len: int) -> Alignment:
    """Alignment from "i-j" links; a target with several links keeps the smallest i."""
    links: List[Optional[int]] = [None] * target_len
    for tok in line.split():
        i_s, sep, j_s = tok.partition("-")
        try:
            i, j = int(i_s), int(j_s)
        except ValueError:
            raise AlignmentFormatError(f"bad link {tok!r}") from None
        if not sep or not (0 <= i < source_len and 0 <= j < target_len):
            raise AlignmentFormatError(
                f"link {tok!r} outside a {source_len}x{target_len} sentence pair")
        if links[j] is None or i < links[j]:
            links[j] = i
    return tuple(links)


def read_pharaoh(path) -> List[str]:
    with open(path, encoding="utf-8") as f:
        lines = f.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return lines
