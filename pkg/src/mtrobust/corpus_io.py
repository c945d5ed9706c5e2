"""M2 ingestion, correction application and quadruple assembly.

An M2 block looks like::

    S I likes it
    A 1 2|||R:VERB:SVA|||like|||REQUIRED|||-NONE-|||0

Token spans are 0-based and end-exclusive.  Sentences are whitespace
tokenized tuples of strings; nothing here re-tokenizes.
"""

import enum
import logging
import random
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

logger = logging.getLogger(__name__)

Sentence = Tuple[str, ...]

NONE_CORRECTION = "-NONE-"
NOOP = "noop"
UNK = "UNK"


class M2ParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class EditConflictError(ValueError):
    pass


class EditBoundsError(ValueError):
    pass


class LengthMismatchError(ValueError):
    pass


class Operation(enum.Enum):
    MISSING = "M"
    REPLACEMENT = "R"
    UNNECESSARY = "U"
    UNKNOWN = "UNK"


@dataclass(frozen=True)
class ErrorType:
    operation: Operation
    category: str

    @classmethod
    def parse(cls, label: str) -> "ErrorType":
        if label == UNK:
            return cls(Operation.UNKNOWN, UNK)
        head, sep, rest = label.partition(":")
        if sep and head in ("M", "R", "U") and rest:
            return cls(Operation(head), rest)
        # Non-ERRANT taxonomies (e.g. CoNLL "Vt") keep their label verbatim.
        return cls(Operation.UNKNOWN, label)

    def __str__(self) -> str:
        if self.operation is Operation.UNKNOWN:
            return self.category
        return f"{self.operation.value}:{self.category}"

    def collapsed(self) -> str:
        """Category without the M/R/U prefix, colons as dashes ("VERB-SVA")."""
        return self.category.replace(":", "-")


@dataclass(frozen=True)
class Edit:
    start: int
    end: int
    replacement: Sentence
    error_type: ErrorType
    annotator: int = 0

    def problems(self) -> List[str]:
        """Soft consistency checks between the span shape and the operation."""
        out = []
        if not 0 <= self.start <= self.end:
            out.append(f"bad span [{self.start},{self.end})")
        op = self.error_type.operation
        insertion = self.start == self.end and len(self.replacement) > 0
        deletion = self.start < self.end and not self.replacement
        if (op is Operation.MISSING) != insertion and op is not Operation.UNKNOWN:
            out.append(f"{self.error_type} edit with span [{self.start},{self.end}) "
                       f"and {len(self.replacement)} replacement tokens")
        elif (op is Operation.UNNECESSARY) != deletion and op is not Operation.UNKNOWN:
            out.append(f"{self.error_type} edit with span [{self.start},{self.end}) "
                       f"and {len(self.replacement)} replacement tokens")
        return out


@dataclass(frozen=True)
class AnnotatedSentence:
    source: Sentence
    edits: Tuple[Edit, ...] = ()
    noop_annotators: frozenset = frozenset()

    def annotators(self) -> List[int]:
        return sorted({e.annotator for e in self.edits} | set(self.noop_annotators))

    def edits_for(self, annotator: int) -> Tuple[Edit, ...]:
        return tuple(e for e in self.edits if e.annotator == annotator)


@dataclass(frozen=True)
class Quadruple:
    x: Sentence
    x_tilde: Sentence
    y: Sentence
    y_tilde: Sentence
    edits: Tuple[Edit, ...] = ()
    dataset_id: str = ""
    index: int = 0

    @property
    def is_clean(self) -> bool:
        return not self.edits

    @property
    def key(self) -> Tuple[str, int]:
        return (self.dataset_id, self.index)


def tokenize(line: str, lowercase: bool = False) -> Sentence:
    if lowercase:
        line = line.lower()
    return tuple(line.split())


# -- M2 -----------------------------------------------------------------------

def _parse_a_line(line: str, lineno: int, lowercase: bool):
    fields = line[2:].split("|||")
    if len(fields) < 6:
        raise M2ParseError(lineno, f"expected 6 '|||'-separated fields, got {len(fields)}")
    span = fields[0].split()
    if len(span) != 2:
        raise M2ParseError(lineno, f"malformed span {fields[0]!r}")
    try:
        start, end = int(span[0]), int(span[1])
        annotator = int(fields[5])
    except ValueError as exc:
        raise M2ParseError(lineno, f"non-integer field: {exc}") from None
    label = fields[1].strip()
    if label == NOOP or (start, end) == (-1, -1):
        return None, annotator
    if start < 0 or end < start:
        raise M2ParseError(lineno, f"invalid span [{start},{end})")
    correction = fields[2].strip()
    if correction == NONE_CORRECTION:
        correction = ""
    edit = Edit(start, end, tokenize(correction, lowercase), ErrorType.parse(label), annotator)
    return edit, annotator


def parse_m2(text, lowercase: bool = False) -> List[AnnotatedSentence]:
    """Parse M2 text (a string or an iterable of lines) into annotated sentences.

    noop edits record their annotator and produce no Edit.  Raises
    M2ParseError with a 1-based line number on malformed input.
    """
    lines = text.splitlines() if isinstance(text, str) else text
    out = []
    source = None
    edits: list = []
    noops: set = set()

    def flush():
        if source is not None:
            out.append(AnnotatedSentence(source, tuple(edits), frozenset(noops)))

    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            flush()
            source, edits, noops = None, [], set()
            continue
        if line.startswith("S ") or line == "S":
            flush()
            source, edits, noops = tokenize(line[2:], lowercase), [], set()
            if not source:
                logger.warning("line %d: empty source sentence", lineno)
        elif line.startswith("A "):
            if source is None:
                raise M2ParseError(lineno, "A-line before any S-line")
            edit, annotator = _parse_a_line(line, lineno, lowercase)
            if edit is None:
                noops.add(annotator)
            else:
                for problem in edit.problems():
                    logger.warning("line %d: %s", lineno, problem)
                edits.append(edit)
        else:
            raise M2ParseError(lineno, f"unrecognized line {line[:40]!r}")
    flush()
    return out


def serialize_m2(sentences: Iterable[AnnotatedSentence]) -> str:
    blocks = []
    for s in sentences:
        lines = ["S " + " ".join(s.source)]
        for a in sorted(s.noop_annotators):
            lines.append(f"A -1 -1|||{NOOP}|||{NONE_CORRECTION}|||REQUIRED|||-NONE-|||{a}")
        for e in s.edits:
            corr = " ".join(e.replacement) or NONE_CORRECTION
            lines.append(f"A {e.start} {e.end}|||{e.error_type}|||{corr}|||REQUIRED|||-NONE-|||{e.annotator}")
        blocks.append("\n".join(lines) + "\n")
    return "\n".join(blocks)


def read_m2(path, lowercase: bool = False) -> List[AnnotatedSentence]:
    with open(path, encoding="utf-8") as f:
        return parse_m2(f, lowercase=lowercase)


# -- edits --------------------------------------------------------------------

def _overlaps(a: Edit, b: Edit) -> bool:
    if a.start == a.end and b.start == b.end:
        return a.start == b.start
    if a.start == a.end:
        return b.start < a.start < b.end
    if b.start == b.end:
        return a.start < b.start < a.end
    return a.start < b.end and b.start < a.end


def check_edits(edits: Sequence[Edit], length: int) -> List[Edit]:
    """Return edits sorted by position after bounds and overlap checks."""
    ordered = sorted(edits, key=lambda e: (e.start, e.end))
    for e in ordered:
        if e.start < 0 or e.end > length or e.start > e.end:
            raise EditBoundsError(f"edit [{e.start},{e.end}) outside sentence of length {length}")
    for i, a in enumerate(ordered):
        for b in ordered[i + 1:]:
            if b.start > a.end:
                break
            if _overlaps(a, b):
                raise EditConflictError(
                    f"edits [{a.start},{a.end})->{' '.join(a.replacement)!r} and "
                    f"[{b.start},{b.end})->{' '.join(b.replacement)!r} overlap")
    return ordered


def apply_edit_list(source: Sentence, edits: Sequence[Edit]) -> Sentence:
    tokens = list(source)
    offset = 0
    for e in check_edits(edits, len(source)):
        tokens[e.start + offset:e.end + offset] = e.replacement
        offset += len(e.replacement) - (e.end - e.start)
    return tuple(tokens)


def apply_edits(s: AnnotatedSentence, annotator: int = 0) -> Sentence:
    """Corrected source: the chosen annotator's edits applied to ``s.source``."""
    return apply_edit_list(s.source, s.edits_for(annotator))


def corrected_position(edits: Sequence[Edit], edit: Edit) -> int:
    """Index in the corrected sentence where ``edit``'s replacement begins."""
    shift = 0
    for e in edits:
        if e is edit:
            continue
        if (e.start, e.end) < (edit.start, edit.end) and e.end <= edit.start:
            shift += len(e.replacement) - (e.end - e.start)
    return edit.start + shift


# -- quadruples -----------------------------------------------------------------

def read_sentences(path, lowercase: bool = False) -> List[Sentence]:
    with open(path, encoding="utf-8") as f:
        out = [tokenize(line, lowercase) for line in f.read().split("\n")]
    if out and not out[-1]:
        out.pop()  # trailing newline
    return out


def assemble_quadruples(annotated: Sequence[AnnotatedSentence],
                        y_lines: Sequence[Sentence],
                        y_tilde_lines: Sequence[Sentence],
                        dataset_id: str = "",
                        annotator: int = 0) -> List[Quadruple]:
    if not len(annotated) == len(y_lines) == len(y_tilde_lines):
        raise LengthMismatchError(
            f"line counts differ: {len(annotated)} M2 sentences, {len(y_lines)} noisy-source "
            f"outputs, {len(y_tilde_lines)} corrected-source outputs")
    out = []
    for i, (s, y, yt) in enumerate(zip(annotated, y_lines, y_tilde_lines)):
        edits = s.edits_for(annotator)
        if not y or not yt:
            logger.warning("%s:%d: empty MT output line", dataset_id, i + 1)
        out.append(Quadruple(s.source, apply_edit_list(s.source, edits), tuple(y), tuple(yt),
                             edits, dataset_id, i))
    return out


def error_count(q: Quadruple) -> int:
    return len(q.edits)


def sample_indices(n: int, k: Optional[int], seed: Optional[int] = None) -> List[int]:
    """Head-k indices, or a sorted seeded random k-subset when ``seed`` is given."""
    if k is None or k >= n:
        return list(range(n))
    if seed is None:
        return list(range(k))
    return sorted(random.Random(seed).sample(range(n), k))
