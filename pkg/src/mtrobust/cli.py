"""Command line pipeline: correct, evaluate, diverge, report.

Exit codes: 0 success, 1 analysis-level failure, 2 I/O or format error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

from . import __version__, alignment, divergence, metrics, report, robustness, svg
from .corpus_io import (Edit, ErrorType, M2ParseError, Quadruple, apply_edits,
                        assemble_quadruples, read_m2, read_sentences, sample_indices)

log = logging.getLogger("mtrobust")

EXIT_OK, EXIT_ANALYSIS, EXIT_IO = 0, 1, 2

QUADRUPLES_FILE = "quadruples.jsonl"
CONFIG_FILE = "config.json"

# Options that do not influence results and are left out of the config echo.
NOT_ECHOED = {"out", "threads", "func", "verbose"}


class AnalysisError(Exception):
    pass


class InputError(Exception):
    pass


# -- helpers ------------------------------------------------------------------------

def _write(path: Path, text: str) -> None:
    report.write_text(path, text)


def _echo_config(args, out: Path) -> None:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in NOT_ECHOED}
    cfg["version"] = __version__
    _write(out / CONFIG_FILE, json.dumps(cfg, indent=2, sort_keys=True) + "\n")


def _dataset_ids(args) -> List[str]:
    ids = list(args.dataset_id or [])
    for path in args.m2[len(ids):]:
        ids.append(Path(path).stem)
    if len(set(ids)) != len(ids):
        raise InputError(f"duplicate dataset ids {ids}; pass --dataset-id per --m2")
    return ids


def load_datasets(args) -> Dict[str, List[Quadruple]]:
    if not (len(args.m2) == len(args.hyp_noisy) == len(args.hyp_clean)):
        raise InputError("--m2, --hyp-noisy and --hyp-clean must be given the same number of times")
    groups = {}
    for name, m2, yp, ytp in zip(_dataset_ids(args), args.m2, args.hyp_noisy, args.hyp_clean):
        annotated = read_m2(m2, lowercase=args.lowercase)
        y = read_sentences(yp, lowercase=args.lowercase)
        yt = read_sentences(ytp, lowercase=args.lowercase)
        if not annotated:
            raise InputError(f"{m2}: no sentences")
        qs = assemble_quadruples(annotated, y, yt, name, args.annotator)
        keep = sample_indices(len(qs), args.sample, args.seed)
        groups[name] = [qs[i] for i in keep]
    return groups


def quadruple_to_json(q: Quadruple) -> str:
    return json.dumps({
        "dataset": q.dataset_id, "index": q.index,
        "x": list(q.x), "x_tilde": list(q.x_tilde), "y": list(q.y), "y_tilde": list(q.y_tilde),
        "edits": [[e.start, e.end, list(e.replacement), str(e.error_type), e.annotator]
                  for e in q.edits],
    }, ensure_ascii=False)


def quadruple_from_json(line: str) -> Quadruple:
    d = json.loads(line)
    edits = tuple(Edit(s, e, tuple(r), ErrorType.parse(t), a) for s, e, r, t, a in d["edits"])
    return Quadruple(tuple(d["x"]), tuple(d["x_tilde"]), tuple(d["y"]), tuple(d["y_tilde"]),
                     edits, d["dataset"], d["index"])


def _fmt(v) -> str:
    return "n/a" if v is None else f"{v:.2f}"


# -- subcommands ----------------------------------------------------------------------

def cmd_correct(args) -> int:
    annotated = read_m2(args.m2[0], lowercase=args.lowercase)
    text = "".join(" ".join(apply_edits(s, args.annotator)) + "\n" for s in annotated)
    if args.out:
        _write(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    groups = load_datasets(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _echo_config(args, out)
    everything = [q for qs in groups.values() for q in qs]
    _write(out / QUADRUPLES_FILE, "".join(quadruple_to_json(q) + "\n" for q in everything))

    recs = robustness.records(everything, args.kernel, args.threads)
    rows = report.dataset_report(groups, exclude=args.exclude or (), nr_kernel=args.kernel,
                                 nr_mode=args.nr_mode, length_discount=args.nr_length_discount)
    meta = report.build_metadata(annotator=args.annotator, nr_kernel=args.kernel,
                                 nr_mode=args.nr_mode, nr_length_discount=args.nr_length_discount,
                                 lowercase=args.lowercase)
    doc = report.Report(meta)
    doc.add("datasets", rows)
    doc.add("records", [dict(dataset=r.quadruple_id[0], index=r.quadruple_id[1], robust=r.robust,
                             n_edits=r.n_edits, source_len=r.source_len, f_bleu=r.f_bleu,
                             f_meteor=r.f_meteor, noise_ratio=r.noise_ratio,
                             source_distance=r.source_distance,
                             output_distance=r.output_distance) for r in recs])
    _write(out / "report.json", report.emit_report(doc, "json"))
    _write(out / "datasets.tsv", report.emit_report(doc, "tsv", "datasets"))
    _write(out / "records.tsv", report.emit_report(doc, "tsv", "records"))

    for r in rows:
        print(f"{r.dataset_id}\tn={r.n_sentences}\tRB={_fmt(r.rb)}\tf-BLEU={_fmt(r.f_bleu_nonrobust)}"
              f"\tf-METEOR={_fmt(r.f_meteor_nonrobust)}\tNR={_fmt(r.mean_nr)}"
              + (f"\t({r.notes})" if r.notes else ""))
    return EXIT_OK


def _safe_name(key: str) -> str:
    return key.replace(":", "_").replace("/", "-").replace("\\", "-")


def _imported_alignments(args, groups) -> Optional[List[alignment.Alignment]]:
    if not args.alignments:
        return None
    if len(args.alignments) != len(groups):
        raise InputError("give one --alignments file per --m2")
    out = []
    for path, (name, qs) in zip(args.alignments, groups.items()):
        lines = alignment.read_pharaoh(path)
        missing = [q.index + 1 for q in qs if len(q.edits) == 1 and q.index >= len(lines)]
        if missing:
            shown = ", ".join(map(str, missing[:20])) + (" ..." if len(missing) > 20 else "")
            raise InputError(f"{path}: no alignment for lines {shown}")
        for q in qs:
            if q.index < len(lines):
                try:
                    out.append(alignment.parse_pharaoh(lines[q.index], len(q.x_tilde),
                                                       len(q.y_tilde)))
                except alignment.AlignmentFormatError as exc:
                    raise InputError(f"{path}:{q.index + 1}: {exc}") from None
            else:
                out.append(tuple([None] * len(q.y_tilde)))
    return out


def cmd_diverge(args) -> int:
    groups = load_datasets(args)
    everything = [q for qs in groups.values() for q in qs]
    if not any(len(q.edits) == 1 for q in everything):
        raise AnalysisError("no single-edit sentences; divergence needs exactly one edit per sentence")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _echo_config(args, out)

    clean = _imported_alignments(args, groups)
    if clean is None:
        table, pairs = alignment.align_corpus(everything, args.iterations, args.threads)
        clean = [c for _, c in pairs]
        aligner = f"ibm-model-1 (iterations={args.iterations})"
        _write(out / "translation_table.txt", table.dump())
        _write(out / "alignments.noisy.pharaoh",
               "".join(alignment.format_pharaoh(a) + "\n" for a, _ in pairs))
        _write(out / "alignments.clean.pharaoh",
               "".join(alignment.format_pharaoh(c) + "\n" for c in clean))
    else:
        aligner = "external pharaoh: " + ", ".join(Path(p).name for p in args.alignments)

    result = divergence.divergence_distribution(everything, clean, args.side, threads=args.threads)
    meta = report.build_metadata(aligner=aligner, side=args.side, annotator=args.annotator,
                                 skipped_unanchored=result.skipped,
                                 omitted_groups=result.omitted_groups)
    doc = report.Report(meta)
    summary = []
    for key, (h, st) in result.groups.items():
        name = _safe_name(key)
        _write(out / f"{name}.hist.tsv", h.dump())
        _write(out / f"{name}.stats", st.line())
        _write(out / f"{name}.svg", svg.emit_svg(svg.HISTOGRAM, (h, st), key))
        summary.append(dict(group=key, instances=h.contributing_instances, n=st.n, mu=st.mu,
                            sigma=st.sigma, gamma1=st.gamma1))
    doc.add("groups", summary)
    doc.add("instances", [dict(dataset=everything[r.index].dataset_id,
                               index=everything[r.index].index, i_star=r.i_star, k_star=r.k_star,
                               error_type=str(everything[r.index].edits[0].error_type),
                               offsets=" ".join(map(str, r.offsets)) if r.offsets is not None else None,
                               skipped=r.skipped)
                          for r in result.instances])
    _write(out / "divergence.json", report.emit_report(doc, "json"))
    _write(out / "groups.tsv", report.emit_report(doc, "tsv", "groups"))
    _write(out / "instances.tsv", report.emit_report(doc, "tsv", "instances"))
    overall = result.groups.get(divergence.OVERALL)
    if overall:
        st = overall[1]
        print(f"overall\tn={st.n}\tmu={_fmt(st.mu)}\tsigma={_fmt(st.sigma)}\tgamma1={_fmt(st.gamma1)}"
              f"\tskipped={result.skipped}")
    return EXIT_OK


def _load_prior(dirs) -> Dict[str, List[Quadruple]]:
    groups: Dict[str, List[Quadruple]] = {}
    for d in dirs:
        path = Path(d) / QUADRUPLES_FILE
        if not path.is_file():
            raise FileNotFoundError(f"{path}: not found; run 'mtrobust evaluate' first")
        with open(path, encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    q = quadruple_from_json(line)
                    groups.setdefault(q.dataset_id, []).append(q)
    return groups


def cmd_report(args) -> int:
    groups = _load_prior(args.input)
    everything = [q for qs in groups.values() for q in qs]
    if not everything:
        raise AnalysisError("prior output holds no sentences")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _echo_config(args, out)

    rows = report.dataset_report(groups, exclude=args.exclude or ())
    bins = report.bin_by_error_count(everything)
    grid, overflow = report.bin_by_length_and_errors(everything)
    rec = report.error_recoverability(everything, args.min_type_count, args.collapse_types)
    corr = [dict(source="datasets", **{f"rho_edits_{k}": v for k, v in
                                      report.aggregate_correlations(report.report_aggregates(rows)).items()})]
    if args.aggregates:
        table = report.load_aggregates(args.aggregates)
        corr.append(dict(source=Path(args.aggregates).name,
                         **{f"rho_edits_{k}": v for k, v in report.aggregate_correlations(table).items()}))

    notes = [] if rec else ["no single-error sentences; recoverability table is empty"]
    counted = [r.rb for r in rec if r.counted]
    band = report.outlier_band(counted) if counted else (None, None)
    doc = report.Report(report.build_metadata(min_type_count=args.min_type_count,
                                              type_mu=band[0], type_sigma=band[1], notes=notes))
    doc.add("datasets", rows)
    doc.add("error_count_bins", bins)
    doc.add("length_error_grid", list(grid) + [overflow])
    doc.add("recoverability", rec)
    doc.add("correlations", corr)
    _write(out / "report.json", report.emit_report(doc, "json"))
    for name in doc.tables:
        _write(out / f"{name}.tsv", report.emit_report(doc, "tsv", name))
    figures = set(args.figures.split(",")) if args.figures else set(svg.FIGURES)
    if svg.ERROR_BARS in figures:
        _write(out / "error_count_bars.svg", svg.emit_svg(svg.ERROR_BARS, bins))
    if svg.BUBBLES in figures:
        _write(out / "bubble_grid.svg", svg.emit_svg(svg.BUBBLES, grid))

    for c in corr:
        print(f"correlations[{c['source']}]\t" + "\t".join(
            f"{k}={_fmt(v)}" for k, v in c.items() if k != "source"))
    for n in notes:
        print(n)
    return EXIT_OK


# -- argument parsing ----------------------------------------------------------------

def _add_inputs(p, require_hyps=True):
    p.add_argument("--m2", action="append", required=True, help="M2 file (repeatable)")
    p.add_argument("--hyp-noisy", action="append", required=require_hyps, default=None,
                   help="MT output of the noisy sources, one tokenized line per sentence")
    p.add_argument("--hyp-clean", action="append", required=require_hyps, default=None,
                   help="MT output of the corrected sources")
    p.add_argument("--dataset-id", action="append", help="name per --m2 (default: file stem)")
    p.add_argument("--sample", type=int, help="keep N sentences per dataset")
    p.add_argument("--seed", type=int, help="seeded random sample instead of the first N")


def _add_common(p):
    p.add_argument("--annotator", type=int, default=0)
    p.add_argument("--lowercase", action="store_true")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mtrobust", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("correct", help="apply M2 corrections, one corrected sentence per line")
    p.add_argument("--m2", action="append", required=True)
    p.add_argument("-o", "--out", help="output file (default: stdout)")
    _add_common(p)
    p.set_defaults(func=cmd_correct)

    p = sub.add_parser("evaluate", help="RB, f-BLEU, f-METEOR and NR per dataset")
    _add_inputs(p)
    _add_common(p)
    p.add_argument("--kernel", choices=metrics.KERNELS, default=metrics.BLEU,
                   help="distance kernel for the noise ratio")
    p.add_argument("--nr-mode", choices=("mean", "corpus"), default="mean")
    p.add_argument("--nr-length-discount", action="store_true")
    p.add_argument("--exclude", action="append", help="dataset left out of an extra ALL row")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("diverge", help="divergence distributions of single-edit sentences")
    _add_inputs(p)
    _add_common(p)
    p.add_argument("--side", choices=divergence.SIDES, default=divergence.REFERENCE)
    p.add_argument("--iterations", type=int, default=alignment.DEFAULT_ITERATIONS)
    p.add_argument("--alignments", action="append",
                   help="Pharaoh x~ -> y~ alignments per --m2, replaces Model 1 training")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_diverge)

    p = sub.add_parser("report", help="bins, grid, recoverability and correlations from evaluate output")
    p.add_argument("--input", action="append", required=True, help="evaluate output directory")
    p.add_argument("--out", required=True)
    p.add_argument("--min-type-count", type=int, default=10)
    p.add_argument("--collapse-types", action="store_true",
                   help="group error types without their M/R/U prefix")
    p.add_argument("--exclude", action="append")
    p.add_argument("--aggregates", help="TSV of per-dataset aggregates to correlate")
    p.add_argument("--figures", help=f"comma separated subset of {','.join(svg.FIGURES[1:])}")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except AnalysisError as exc:
        print(f"mtrobust: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS
    except (OSError, InputError, M2ParseError, ValueError) as exc:
        print(f"mtrobust: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
