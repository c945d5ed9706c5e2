"""Divergence distributions around the target-side image of a source edit.

For a single-edit quadruple the corrected source position i* is mapped
through the x~ -> y~ alignment to a target anchor k*.  Tokens that differ
between the two outputs are recorded as offsets j - k*, pooled into
histograms, and summarised by their mean, standard deviation and
skewness (population moments).
"""

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .alignment import Alignment
from .corpus_io import Edit, Quadruple, corrected_position

REFERENCE = "reference"
OUTPUT = "output"
SIDES = (REFERENCE, OUTPUT)

OVERALL = "overall"
ERROR_TYPE = "error_type"
QUARTILE = "quartile"
GROUPINGS = (OVERALL, ERROR_TYPE, QUARTILE)


class NoAnchor(Exception):
    """The edit has no usable target-side anchor."""


@dataclass
class DivergenceHistogram:
    counts: Counter = field(default_factory=Counter)
    contributing_instances: int = 0

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def add(self, offsets: Iterable[int]) -> None:
        self.counts.update(offsets)
        self.contributing_instances += 1

    def merge(self, other: "DivergenceHistogram") -> None:
        self.counts.update(other.counts)
        self.contributing_instances += other.contributing_instances

    def items(self) -> List[Tuple[int, int]]:
        return sorted((o, c) for o, c in self.counts.items() if c)

    def mirrored(self) -> "DivergenceHistogram":
        return DivergenceHistogram(Counter({-o: c for o, c in self.counts.items()}),
                                   self.contributing_instances)

    def dump(self) -> str:
        return "".join(f"{o}\t{c}\n" for o, c in self.items())


@dataclass(frozen=True)
class DistributionStats:
    mu: Optional[float]
    sigma: Optional[float]
    gamma1: Optional[float]
    n: int

    @property
    def defined(self) -> bool:
        return self.gamma1 is not None

    def line(self) -> str:
        fmt = lambda v: "NA" if v is None else f"{v:.4f}"
        return f"{fmt(self.mu)} {fmt(self.sigma)} {fmt(self.gamma1)} {self.n}\n"


def distribution_stats(h: DivergenceHistogram) -> DistributionStats:
    items = h.items()
    n = sum(c for _, c in items)
    if n == 0:
        return DistributionStats(None, None, None, 0)
    mu = math.fsum(o * c for o, c in items) / n
    m2 = math.fsum(c * (o - mu) ** 2 for o, c in items) / n
    sigma = math.sqrt(m2)
    if n < 2 or sigma == 0.0:
        return DistributionStats(mu, sigma, None, n)
    m3 = math.fsum(c * (o - mu) ** 3 for o, c in items) / n
    return DistributionStats(mu, sigma, m3 / sigma ** 3, n)


def correction_position(q: Quadruple, edit: Edit) -> int:
    """i*: where the edit lands in x~ (deletions use the following token)."""
    i = corrected_position(q.edits, edit)
    if not edit.replacement:
        i = min(i, len(q.x_tilde) - 1)
    return i


def edit_anchor(q: Quadruple, edit: Edit, alignment_clean: Alignment) -> int:
    """k*: first target position of y~ aligned to i*.

    Falls back to the aligned source index closest to i* (ties toward the
    smaller index) and takes its first aligned target position.
    """
    if len(q.edits) != 1:
        raise ValueError(f"edit_anchor needs a single-edit quadruple, got {len(q.edits)} edits")
    if not q.y_tilde or not q.x_tilde:
        raise NoAnchor("empty corrected sentence")
    i_star = correction_position(q, edit)
    first_target: Dict[int, int] = {}
    for j, i in enumerate(alignment_clean):
        if i is not None and i not in first_target:
            first_target[i] = j
    if i_star in first_target:
        return first_target[i_star]
    if not first_target:
        raise NoAnchor("no target token is aligned")
    nearest = min(first_target, key=lambda i: (abs(i - i_star), i))
    return first_target[nearest]


def divergent_offsets(q: Quadruple, k_star: int, side: str = REFERENCE) -> List[int]:
    """Offsets j - k* of tokens missing (by type) from the other output.

    ``reference`` walks y~ and checks membership in y; ``output`` walks y
    and checks membership in y~.
    """
    if side == REFERENCE:
        walk, other = q.y_tilde, set(q.y)
    elif side == OUTPUT:
        walk, other = q.y, set(q.y_tilde)
    else:
        raise ValueError(f"unknown side {side!r}")
    return [j - k_star for j, tok in enumerate(walk) if tok not in other]


def quartile(q: Quadruple, edit: Edit) -> int:
    """1-based quartile of i*/|x~|; the last bin is closed."""
    frac = correction_position(q, edit) / len(q.x_tilde)
    return min(int(frac * 4), 3) + 1


@dataclass
class InstanceResult:
    index: int
    group_keys: Tuple[str, ...]
    offsets: Optional[List[int]]
    k_star: Optional[int]
    i_star: Optional[int]
    skipped: Optional[str] = None


def _instance(q: Quadruple, clean: Alignment, side: str, n: int) -> InstanceResult:
    edit = q.edits[0]
    try:
        k_star = edit_anchor(q, edit, clean)
    except NoAnchor as exc:
        return InstanceResult(n, (), None, None, None, str(exc))
    keys = (OVERALL, f"{ERROR_TYPE}:{edit.error_type}", f"{QUARTILE}:Q{quartile(q, edit)}")
    return InstanceResult(n, keys, divergent_offsets(q, k_star, side), k_star,
                          correction_position(q, edit))


@dataclass
class DivergenceResult:
    groups: Dict[str, Tuple[DivergenceHistogram, DistributionStats]]
    instances: List[InstanceResult]
    skipped: int
    omitted_groups: List[str]


def divergence_distribution(qs: Sequence[Quadruple], alignments: Sequence[Alignment],
                            side: str = REFERENCE,
                            group_by: Sequence[str] = GROUPINGS,
                            threads: int = 1) -> DivergenceResult:
    """Pool offsets of single-edit quadruples into per-group histograms.

    ``alignments[i]`` is the x~ -> y~ alignment of ``qs[i]``.  Multi-edit
    and clean quadruples are ignored; unanchored ones are skipped and
    counted.
    """
    if len(qs) != len(alignments):
        raise ValueError(f"{len(qs)} quadruples but {len(alignments)} alignments")
    jobs = [(q, a, n) for n, (q, a) in enumerate(zip(qs, alignments)) if len(q.edits) == 1]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(lambda job: _instance(job[0], job[1], side, job[2]), jobs))
    else:
        results = [_instance(q, a, side, n) for q, a, n in jobs]

    wanted = set(group_by)
    hists: Dict[str, DivergenceHistogram] = {}
    if OVERALL in wanted:
        hists[OVERALL] = DivergenceHistogram()
    if QUARTILE in wanted:
        for n in range(1, 5):
            hists[f"{QUARTILE}:Q{n}"] = DivergenceHistogram()
    for r in results:
        if r.offsets is None:
            continue
        for key in r.group_keys:
            if key.partition(":")[0] in wanted:
                hists.setdefault(key, DivergenceHistogram()).add(r.offsets)
    groups, omitted = {}, []
    for key in sorted(hists, key=lambda k: (k != OVERALL, k)):
        h = hists[key]
        if key != OVERALL and h.contributing_instances == 0:
            omitted.append(key)
            continue
        groups[key] = (h, distribution_stats(h))
    return DivergenceResult(groups, results, sum(1 for r in results if r.skipped), omitted)
