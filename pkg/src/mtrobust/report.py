"""Aggregate analyses and machine-readable report emission.

Dataset tables, error-count and length x error-count bins, per-type
recoverability with a [mu - 2 sigma, mu + 2 sigma] outlier band, Pearson
correlation, and JSON/TSV writers with fixed float formatting.
"""

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from . import __version__, metrics
from .corpus_io import Quadruple
from .robustness import (AllRobustError, corpus_noise_ratio, faux_corpus_score,
                         robustness_percentage)

ALL = "ALL"
FLOAT_DECIMALS = 4


@dataclass
class CorpusReport:
    dataset_id: str
    n_sentences: int
    mean_edits_per_sentence: float
    rb: float
    f_bleu_nonrobust: Optional[float]
    f_meteor_nonrobust: Optional[float]
    mean_nr: Optional[float]
    notes: str = ""


def corpus_report(dataset_id: str, qs: Sequence[Quadruple], nr_kernel: str = metrics.BLEU,
                  nr_mode: str = "mean", length_discount: bool = False) -> CorpusReport:
    notes = []
    faux = {}
    for kernel in (metrics.BLEU, metrics.METEOR):
        try:
            faux[kernel] = faux_corpus_score(qs, kernel, "nonrobust")
        except AllRobustError:
            faux[kernel] = None
            if "all-robust" not in notes:
                notes.append("all-robust")
    try:
        nr = corpus_noise_ratio(qs, nr_kernel, nr_mode, length_discount)
    except ValueError:
        nr = None
        notes.append("nr-undefined")
    return CorpusReport(dataset_id, len(qs), sum(len(q.edits) for q in qs) / len(qs),
                        robustness_percentage(qs), faux[metrics.BLEU], faux[metrics.METEOR],
                        nr, ",".join(notes))


def dataset_report(groups: Mapping[str, Sequence[Quadruple]], exclude: Sequence[str] = (),
                   **kwargs) -> List[CorpusReport]:
    """One row per dataset, then ALL, then ALL minus ``exclude`` if given.

    Aggregate rows are computed over the concatenated quadruples.
    """
    rows = [corpus_report(name, qs, **kwargs) for name, qs in groups.items()]
    everything = [q for qs in groups.values() for q in qs]
    if everything:
        rows.append(corpus_report(ALL, everything, **kwargs))
    if exclude:
        kept = [q for name, qs in groups.items() if name not in exclude for q in qs]
        if kept:
            rows.append(corpus_report(f"{ALL}\\{','.join(exclude)}", kept, **kwargs))
    return rows


@dataclass
class BinnedSeries:
    key: str
    n: int
    rb: Optional[float]
    f_bleu_nonrobust: Optional[float]
    plotted: bool = True
    flags: str = ""


def _series(key: str, qs: Sequence[Quadruple]) -> BinnedSeries:
    if not qs:
        return BinnedSeries(key, 0, None, None, False, "empty")
    try:
        fb = faux_corpus_score(qs, metrics.BLEU, "nonrobust")
        flags = ""
    except AllRobustError:
        fb, flags = None, "all-robust"
    return BinnedSeries(key, len(qs), robustness_percentage(qs), fb, True, flags)


def bin_by_error_count(qs: Sequence[Quadruple], last: int = 10) -> List[BinnedSeries]:
    """Bins 1..last-1 plus "<last>+"; error-free sentences are left out."""
    bins: Dict[int, List[Quadruple]] = {k: [] for k in range(1, last + 1)}
    for q in qs:
        if q.edits:
            bins[min(len(q.edits), last)].append(q)
    return [_series(f"{k}+" if k == last else str(k), bins[k]) for k in bins]


LENGTH_BOUNDS = (5, 10, 15, 20, 25, 30, 35)
GRID_ERRORS = (1, 2, 3, 4, 5)
MIN_PLOTTED_RB = 1.0


@dataclass
class GridCell(BinnedSeries):
    length_bin: str = ""
    errors: int = 0


def length_bin(n_tokens: int) -> Optional[str]:
    for bound in LENGTH_BOUNDS:
        if n_tokens < bound:
            return f"<{bound}"
    return None


def bin_by_length_and_errors(qs: Sequence[Quadruple]) -> Tuple[List[GridCell], BinnedSeries]:
    """Grid over noisy-source length bins and 1..5 errors, plus an overflow bucket.

    Cells with no members or RB under 1% keep their data but are not plotted.
    """
    cells: Dict[Tuple[str, int], List[Quadruple]] = {
        (f"<{b}", e): [] for b in LENGTH_BOUNDS for e in GRID_ERRORS}
    overflow = []
    for q in qs:
        if not q.edits:
            continue
        lb = length_bin(len(q.x))
        if lb is None or len(q.edits) > GRID_ERRORS[-1]:
            overflow.append(q)
        else:
            cells[(lb, len(q.edits))].append(q)
    grid = []
    for (lb, e), members in cells.items():
        s = _series(f"{lb}/{e}", members)
        plotted = s.n > 0 and s.rb is not None and s.rb > MIN_PLOTTED_RB
        flags = s.flags or ("" if plotted else "rb-below-threshold")
        grid.append(GridCell(s.key, s.n, s.rb, s.f_bleu_nonrobust, plotted, flags, lb, e))
    over = _series("overflow", overflow)
    over.plotted = False
    return grid, over


class UndefinedCorrelation(ValueError):
    pass


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    if len(xs) != len(ys) or len(xs) < 2:
        raise ValueError("pearson needs two equally long series of length >= 2")
    mx = math.fsum(xs) / len(xs)
    my = math.fsum(ys) / len(ys)
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    syy = math.fsum((y - my) ** 2 for y in ys)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelation("zero variance")
    return max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))


RECOVERABLE = "recoverable-outlier"
NONRECOVERABLE = "nonrecoverable-outlier"
TYPICAL = "typical"


@dataclass
class ErrorTypeRecoverability:
    error_type: str
    n_instances: int
    rb: float
    flag: str = TYPICAL
    counted: bool = True


def outlier_band(values: Sequence[float]) -> Tuple[float, float]:
    """Mean and population standard deviation."""
    mu = math.fsum(values) / len(values)
    return mu, math.sqrt(math.fsum((v - mu) ** 2 for v in values) / len(values))


def error_recoverability(qs: Sequence[Quadruple], min_count: int = 10,
                         collapse: bool = False) -> List[ErrorTypeRecoverability]:
    """Per-type RB over single-edit sentences, flagged outside mu +/- 2 sigma.

    Types with fewer than ``min_count`` instances are listed but take no
    part in the band.
    """
    by_type: Dict[str, List[Quadruple]] = {}
    for q in qs:
        if len(q.edits) != 1:
            continue
        et = q.edits[0].error_type
        by_type.setdefault(et.collapsed() if collapse else str(et), []).append(q)
    rows = [ErrorTypeRecoverability(t, len(m), robustness_percentage(m), TYPICAL,
                                    len(m) >= min_count)
            for t, m in sorted(by_type.items())]
    flag_outliers(rows)
    rows.sort(key=lambda r: (-r.rb, r.error_type))
    return rows


def flag_outliers(rows: Sequence[ErrorTypeRecoverability]) -> None:
    """Set ``flag`` in place on counted rows outside mu +/- 2 sigma."""
    counted = [r.rb for r in rows if r.counted]
    if not counted:
        return
    mu, sigma = outlier_band(counted)
    # relative slack so ties with the band edge survive rescaling
    tol = 1e-9 * (abs(mu) + sigma)
    for r in rows:
        r.flag = TYPICAL
        if r.counted and abs(r.rb - mu) - 2 * sigma > tol:
            r.flag = RECOVERABLE if r.rb > mu else NONRECOVERABLE


# -- aggregate tables supplied as TSV -------------------------------------------------

AGGREGATE_COLUMNS = ("dataset", "n_sentences", "mean_edits", "rb", "f_bleu", "f_meteor", "nr")


def load_aggregates(path) -> List[dict]:
    with open(path, encoding="utf-8", newline="") as f:
        rows = list(csv.DictReader(f, delimiter="\t"))
    for r in rows:
        for k in AGGREGATE_COLUMNS[1:]:
            r[k] = float(r[k])
    return rows


def aggregate_correlations(rows: Sequence[Mapping]) -> Dict[str, Optional[float]]:
    """Pearson correlation of mean edits per sentence with RB, f-BLEU and f-METEOR."""
    rows = [r for r in rows if not str(r["dataset"]).startswith(ALL)]
    xs = [r["mean_edits"] for r in rows]
    out = {}
    for col in ("rb", "f_bleu", "f_meteor"):
        ys = [r[col] for r in rows]
        if any(v is None for v in ys):
            out[col] = None
            continue
        try:
            out[col] = pearson(xs, ys)
        except (ValueError, UndefinedCorrelation):
            out[col] = None
    return out


def report_aggregates(rows: Sequence[CorpusReport]) -> List[dict]:
    return [dict(dataset=r.dataset_id, n_sentences=r.n_sentences,
                 mean_edits=r.mean_edits_per_sentence, rb=r.rb, f_bleu=r.f_bleu_nonrobust,
                 f_meteor=r.f_meteor_nonrobust, nr=r.mean_nr) for r in rows]


# -- emission -----------------------------------------------------------------------

def build_metadata(aligner: str = "none", side: str = "reference", annotator: int = 0,
                   **extra) -> dict:
    meta = {
        "toolkit": "mtrobust",
        "version": __version__,
        "bleu": "BLEU-4; sentence level add-one smoothing for n>=2; corpus level unsmoothed",
        "meteor": (f"meteor-lite: exact token matches only, alpha={metrics.METEOR_ALPHA}, "
                   f"beta={metrics.METEOR_BETA}, gamma={metrics.METEOR_GAMMA}"),
        "attack_criterion": ("s(x,x~) + (s(y~,y^) - s(y,y^)) / s(y~,y^) > 1 with y^ := y~; "
                             "numerator ordered so that the criterion equals NR > 1"),
        "aligner": aligner,
        "divergence_side": side,
        "annotator": annotator,
    }
    meta.update(extra)
    return meta


@dataclass
class Report:
    metadata: dict
    tables: Dict[str, List[dict]] = field(default_factory=dict)

    def add(self, name: str, rows) -> None:
        self.tables[name] = [r if isinstance(r, dict) else asdict(r) for r in rows]


def _round(value):
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            return None
        return round(value, FLOAT_DECIMALS) + 0.0
    if isinstance(value, dict):
        return {k: _round(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round(v) for v in value]
    return value


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.{FLOAT_DECIMALS}f}"
    return str(value)


def emit_report(report: Report, fmt: str = "json", table: Optional[str] = None) -> str:
    """Serialise a report; TSV emits the single table named by ``table``."""
    if fmt == "json":
        doc = {"metadata": report.metadata, "tables": report.tables}
        return json.dumps(_round(doc), indent=2, ensure_ascii=False) + "\n"
    if fmt == "tsv":
        rows = report.tables.get(table, []) if table else []
        buf = io.StringIO()
        if rows:
            writer = csv.writer(buf, delimiter="\t", lineterminator="\n")
            header = list(rows[0])
            writer.writerow(header)
            for r in rows:
                writer.writerow([_cell(r.get(k)) for k in header])
        return buf.getvalue()
    raise ValueError(f"unknown report format {fmt!r}")


def write_text(path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
