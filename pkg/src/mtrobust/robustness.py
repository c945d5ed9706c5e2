"""Reference-less robustness metrics over (x, x~, y, y~) quadruples.

The clean-input output y~ stands in for the reference translation, so
every score here measures agreement between the two system outputs.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from . import metrics
from .corpus_io import Quadruple


class AllRobustError(ValueError):
    """Every quadruple was robust, so a non-robust subset score does not exist."""


@dataclass(frozen=True)
class RobustnessRecord:
    quadruple_id: Tuple[str, int]
    robust: bool
    f_bleu: Optional[float]
    f_meteor: Optional[float]
    noise_ratio: Optional[float]
    source_distance: float
    output_distance: Optional[float]
    n_edits: int = 0
    source_len: int = 0


def is_robust(q: Quadruple) -> bool:
    return tuple(q.y) == tuple(q.y_tilde)


def robustness_percentage(qs: Sequence[Quadruple]) -> float:
    if not qs:
        raise ValueError("robustness_percentage of an empty set")
    return 100.0 * sum(1 for q in qs if is_robust(q)) / len(qs)


def faux_corpus_score(qs: Sequence[Quadruple], kernel: str = metrics.BLEU,
                      subset: str = "all") -> float:
    """Corpus score of every y against its y~ as reference.

    ``subset="nonrobust"`` drops quadruples whose outputs agree first and
    raises AllRobustError when nothing is left.
    """
    if subset not in ("all", "nonrobust"):
        raise ValueError(f"unknown subset {subset!r}")
    pool = [q for q in qs if subset == "all" or not is_robust(q)]
    if not pool:
        if qs:
            raise AllRobustError("no non-robust quadruples")
        raise ValueError("faux_corpus_score of an empty set")
    return metrics.corpus_score([(q.y, q.y_tilde) for q in pool], kernel)


def source_distance(q: Quadruple, kernel: str = metrics.BLEU) -> float:
    if tuple(q.x) == tuple(q.x_tilde):
        return 0.0
    return metrics.distance(q.x, q.x_tilde, kernel)


def output_distance(q: Quadruple, kernel: str = metrics.BLEU) -> float:
    if tuple(q.y) == tuple(q.y_tilde):
        return 0.0
    return metrics.distance(q.y, q.y_tilde, kernel)


def noise_ratio(q: Quadruple, kernel: str = metrics.BLEU) -> Optional[float]:
    """Output distance over source distance.

    None when x == x~, or when an empty corrected side leaves a distance
    without a reference.
    """
    if not q.x_tilde or (not q.y_tilde and q.y):
        return None
    d_src = source_distance(q, kernel)
    if d_src == 0.0:
        return None
    return output_distance(q, kernel) / d_src


def corpus_noise_ratio(qs: Sequence[Quadruple], kernel: str = metrics.BLEU,
                       mode: str = "mean", length_discount: bool = False) -> float:
    """Average sentence NR (``mode="mean"``) or ratio of corpus distances.

    The length discount multiplies the result by mean source-side length
    over mean output-side length.
    """
    scored = [(q, noise_ratio(q, kernel)) for q in qs]
    defined = [q for q, nr in scored if nr is not None]
    if not defined:
        raise ValueError("no quadruple has x != x~; noise ratio undefined")
    if mode == "mean":
        values = [nr for _, nr in scored if nr is not None]
        value = math.fsum(values) / len(values)
    elif mode == "corpus":
        d_out = 100.0 - metrics.corpus_score([(q.y, q.y_tilde) for q in defined], kernel)
        d_src = 100.0 - metrics.corpus_score([(q.x, q.x_tilde) for q in defined], kernel)
        if d_src == 0.0:
            raise ValueError("corpus source distance is zero")
        value = d_out / d_src
    else:
        raise ValueError(f"unknown noise ratio mode {mode!r}")
    if length_discount:
        value *= length_ratio(defined)
    return value


def length_ratio(qs: Sequence[Quadruple]) -> float:
    src = sum(len(q.x) + len(q.x_tilde) for q in qs)
    tgt = sum(len(q.y) + len(q.y_tilde) for q in qs)
    return src / tgt if tgt else 1.0


def attack_success(q: Quadruple, kernel: str = metrics.BLEU) -> Optional[bool]:
    nr = noise_ratio(q, kernel)
    return None if nr is None else nr > 1.0


def attack_success_similarity(q: Quadruple, kernel: str = metrics.BLEU) -> Optional[bool]:
    """Adversarial-attack criterion written with similarities, y^ := y~.

    s(x, x~) + (s(y~, y^) - s(y, y^)) / s(y~, y^) > 1 with s = 1 - d/100.
    """
    if tuple(q.x) == tuple(q.x_tilde):
        return None
    y_hat = q.y_tilde
    s_src = 1.0 - metrics.distance(q.x, q.x_tilde, kernel) / 100.0
    s_clean = 1.0 - metrics.distance(q.y_tilde, y_hat, kernel) / 100.0
    s_noisy = 1.0 - metrics.distance(q.y, y_hat, kernel) / 100.0
    return s_src + (s_clean - s_noisy) / s_clean > 1.0


def record(q: Quadruple, kernel: str = metrics.BLEU) -> RobustnessRecord:
    robust = is_robust(q)
    d_src = source_distance(q, kernel) if q.x_tilde else 100.0
    nr = noise_ratio(q, kernel)
    if q.y_tilde:
        f_bleu = metrics.sentence_bleu(q.y, q.y_tilde).score
        f_meteor = metrics.meteor_lite(q.y, q.y_tilde).score
        d_out = output_distance(q, kernel)
    else:
        f_bleu = f_meteor = None
        d_out = 0.0 if robust else None
    return RobustnessRecord(q.key, robust, f_bleu, f_meteor, nr, d_src, d_out,
                            len(q.edits), len(q.x))


def records(qs: Sequence[Quadruple], kernel: str = metrics.BLEU,
            threads: int = 1) -> List[RobustnessRecord]:
    if threads <= 1:
        return [record(q, kernel) for q in qs]
    with ThreadPoolExecutor(threads) as pool:
        return list(pool.map(lambda q: record(q, kernel), qs))
