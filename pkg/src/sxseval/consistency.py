"""Inter-translation consistency: does one annotator mark the shared parts
of two systems' translations the same way?

Tokens of the two clean targets are aligned with difflib's sequence matcher
(longest contiguous matching blocks, earliest-position tie-breaks, no junk
heuristic). An error whose covered tokens all sit inside `equal` operations
is a potential common error; two such errors occupying the same aligned
token slots form a pair, and a criterion (span / +category / +severity)
decides whether the pair counts as consistently marked.
"""

from __future__ import annotations

import difflib
import enum
import re
from dataclasses import dataclass

from .errors import WorkbenchError
from .model import (
    ErrorSpan,
    MqmAnnotation,
    Project,
    SegmentRef,
    Setting,
    Side,
)

_TOKEN_RE = re.compile(r"\S+")


class ItcCriterion(str, enum.Enum):
    SPAN = "span"
    SPAN_CAT = "span_cat"
    SPAN_SEV = "span_sev"
    SPAN_CAT_SEV = "span_cat_sev"


@dataclass(frozen=True)
class AlignOp:
    kind: str  # equal | replace | insert | delete
    a_start: int
    a_end: int
    b_start: int
    b_end: int


@dataclass(frozen=True)
class ItcResult:
    annotator: str
    system_a: str
    system_b: str
    criterion: ItcCriterion
    matched: int
    potential: int

    @property
    def percentage(self) -> float | None:
        if self.potential == 0:
            return None
        return self.matched / self.potential


def tokenize(text: str) -> tuple[list[str], list[tuple[int, int]]]:
    """Whitespace tokens plus their character ranges on the clean text."""
    tokens, spans = [], []
    for m in _TOKEN_RE.finditer(text):
        tokens.append(m.group())
        spans.append((m.start(), m.end()))
    return tokens, spans


def align_tokens(tokens_a: list[str], tokens_b: list[str]) -> tuple[AlignOp, ...]:
    matcher = difflib.SequenceMatcher(None, tokens_a, tokens_b, autojunk=False)
    return tuple(
        AlignOp(tag, i1, i2, j1, j2) for tag, i1, i2, j1, j2 in matcher.get_opcodes()
    )


def _equal_maps(ops) -> tuple[dict[int, int], dict[int, int]]:
    """Token index maps a->b and b->a restricted to `equal` regions."""
    a_to_b: dict[int, int] = {}
    b_to_a: dict[int, int] = {}
    for op in ops:
        if op.kind != "equal":
            continue
        for offset in range(op.a_end - op.a_start):
            a_to_b[op.a_start + offset] = op.b_start + offset
            b_to_a[op.b_start + offset] = op.a_start + offset
    return a_to_b, b_to_a


def _covered_tokens(span: ErrorSpan, token_spans) -> frozenset[int]:
    return frozenset(
        i
        for i, (t_start, t_end) in enumerate(token_spans)
        if span.start < t_end and span.end > t_start
    )


@dataclass(frozen=True)
class Candidate:
    """A potential common error: paired when both sides marked it."""

    slots: frozenset[int]  # aligned token indices, in B coordinates
    error_a: ErrorSpan | None
    error_b: ErrorSpan | None


def potential_common_errors(
    errors_a,
    errors_b,
    ops,
    text_a: str,
    text_b: str,
    strict_containment: bool = True,
) -> list[Candidate]:
    """Candidates over one segment pair.

    An error qualifies when it covers at least one token and every covered
    token lies in an `equal` op (with ``strict_containment`` off, it is
    enough that some covered token does; the aligned slots are then the
    equal-region subset). Errors with identical aligned slots pair up
    one-to-one in deterministic span order; whole-segment errors without a
    real span never participate.
    """
    _, token_spans_a = tokenize(text_a)
    _, token_spans_b = tokenize(text_b)
    a_to_b, b_to_a = _equal_maps(ops)
    b_identity = {t: t for t in b_to_a}

    def slots_for(span, token_spans, mapping) -> frozenset[int] | None:
        covered = _covered_tokens(span, token_spans)
        if not covered:
            return None
        inside = frozenset(t for t in covered if t in mapping)
        if not inside:
            return None
        if strict_containment and inside != covered:
            return None
        return frozenset(mapping[t] for t in inside)

    def order(span: ErrorSpan) -> tuple:
        return (span.start, span.end, span.category.path(), span.severity.value)

    by_slots_a: dict[frozenset[int], list[ErrorSpan]] = {}
    by_slots_b: dict[frozenset[int], list[ErrorSpan]] = {}
    for span in errors_a:
        if span.unspecified_span or span.side != Side.TARGET:
            continue
        slots = slots_for(span, token_spans_a, a_to_b)
        if slots is not None:
            by_slots_a.setdefault(slots, []).append(span)
    for span in errors_b:
        if span.unspecified_span or span.side != Side.TARGET:
            continue
        slots = slots_for(span, token_spans_b, b_identity)
        if slots is not None:
            by_slots_b.setdefault(slots, []).append(span)

    candidates: list[Candidate] = []
    for slots in sorted(set(by_slots_a) | set(by_slots_b), key=sorted):
        listed_a = sorted(by_slots_a.get(slots, []), key=order)
        listed_b = sorted(by_slots_b.get(slots, []), key=order)
        for i in range(max(len(listed_a), len(listed_b))):
            candidates.append(
                Candidate(
                    slots=slots,
                    error_a=listed_a[i] if i < len(listed_a) else None,
                    error_b=listed_b[i] if i < len(listed_b) else None,
                )
            )
    return candidates


def candidate_matches(
    candidate: Candidate,
    criterion: ItcCriterion,
    match_subcategory: bool = False,
) -> bool:
    a, b = candidate.error_a, candidate.error_b
    if a is None or b is None:
        return False
    if criterion in (ItcCriterion.SPAN_CAT, ItcCriterion.SPAN_CAT_SEV):
        if a.category.category != b.category.category:
            return False
        if match_subcategory and a.category.subcategory != b.category.subcategory:
            return False
    if criterion in (ItcCriterion.SPAN_SEV, ItcCriterion.SPAN_CAT_SEV):
        if a.severity != b.severity:
            return False
    return True


class _PairScanner:
    """Caches annotation indexes and per-segment alignments across the many
    (annotator, pair) cells of a report."""

    def __init__(self, project: Project, setting: Setting):
        self.project = project
        self.setting = setting
        self.index: dict[tuple[str, str, SegmentRef], list[MqmAnnotation]] = {}
        for a in project.mqm_for(setting):
            self.index.setdefault((a.annotator, a.system, a.segment), []).append(a)
        self._ops: dict[tuple[str, str, SegmentRef], tuple[AlignOp, ...]] = {}

    def _occurrence(
        self, annotator: str, system: str, seg: SegmentRef, other: str
    ) -> MqmAnnotation | None:
        """The side-by-side annotation of ``system`` to compare against
        ``other``: the explicitly paired one when it exists, otherwise the
        occurrence from the first designated pair listing the system."""
        occurrences = self.index.get((annotator, system, seg), [])
        if not occurrences:
            return None
        if self.setting != Setting.SXS_MQM:
            return occurrences[0]
        for ann in occurrences:
            if ann.pair_partner == other:
                return ann

        def pair_rank(ann: MqmAnnotation) -> tuple:
            pair = frozenset((system, ann.pair_partner))
            for i, designated in enumerate(self.project.designated_pairs):
                if frozenset(designated) == pair:
                    return (0, i)
            return (1, ann.pair_partner or "")

        return sorted(occurrences, key=pair_rank)[0]

    def ops(self, sys_a: str, sys_b: str, seg: SegmentRef) -> tuple[AlignOp, ...]:
        key = (sys_a, sys_b, seg)
        if key not in self._ops:
            tokens_a, _ = tokenize(self.project.unit_map[(sys_a, seg)].target)
            tokens_b, _ = tokenize(self.project.unit_map[(sys_b, seg)].target)
            self._ops[key] = align_tokens(tokens_a, tokens_b)
        return self._ops[key]

    def candidates(
        self,
        annotator: str,
        system_a: str,
        system_b: str,
        strict_containment: bool = True,
    ) -> list[Candidate]:
        # canonical orientation keeps the result symmetric in (a, b); the
        # alignment itself is order-sensitive through its tie-breaking
        sys_a, sys_b = sorted((system_a, system_b))
        out: list[Candidate] = []
        found = False
        for seg in self.project.segments:
            ann_a = self._occurrence(annotator, sys_a, seg, sys_b)
            ann_b = self._occurrence(annotator, sys_b, seg, sys_a)
            if ann_a is None or ann_b is None:
                continue
            found = True
            out.extend(
                potential_common_errors(
                    ann_a.errors,
                    ann_b.errors,
                    self.ops(sys_a, sys_b, seg),
                    self.project.unit_map[(sys_a, seg)].target,
                    self.project.unit_map[(sys_b, seg)].target,
                    strict_containment=strict_containment,
                )
            )
        if not found:
            raise WorkbenchError(
                "E_NO_OVERLAP",
                f"{annotator} has no common segments for {system_a}/{system_b}",
            )
        return out


def itc(
    project: Project,
    setting: Setting,
    annotator: str,
    system_a: str,
    system_b: str,
    criterion: ItcCriterion,
    strict_containment: bool = True,
    match_subcategory: bool = False,
) -> ItcResult:
    scanner = _PairScanner(project, setting)
    candidates = scanner.candidates(annotator, system_a, system_b, strict_containment)
    matched = sum(
        1 for c in candidates if candidate_matches(c, criterion, match_subcategory)
    )
    return ItcResult(annotator, system_a, system_b, criterion, matched, len(candidates))


def itc_report(
    project: Project,
    setting: Setting,
    pair_scope: str = "designated",
    strict_containment: bool = True,
    match_subcategory: bool = False,
) -> list[dict]:
    """Scope means per criterion: per-pair mean over contributing annotators
    (those with at least one potential error), then mean over pairs."""
    if pair_scope not in ("designated", "non_designated"):
        raise WorkbenchError("E_BAD_VALUE", f"unknown pair_scope {pair_scope!r}")
    designated = {frozenset(p) for p in project.designated_pairs}
    if pair_scope == "designated":
        pairs = sorted({tuple(sorted(p)) for p in designated})
    else:
        annotated = sorted({a.system for a in project.mqm_for(setting)})
        pairs = [
            (x, y)
            for i, x in enumerate(annotated)
            for y in annotated[i + 1 :]
            if frozenset((x, y)) not in designated
        ]

    scanner = _PairScanner(project, setting)
    per_pair: dict[tuple[str, str], dict[str, list[Candidate]]] = {}
    for a, b in pairs:
        cells: dict[str, list[Candidate]] = {}
        for annotator in sorted(project.annotators):
            try:
                cells[annotator] = scanner.candidates(
                    annotator, a, b, strict_containment
                )
            except WorkbenchError as exc:
                if exc.code != "E_NO_OVERLAP":
                    raise
        per_pair[(a, b)] = cells

    rows = []
    for criterion in ItcCriterion:
        pair_values = []
        contributing: set[str] = set()
        for pair, cells in per_pair.items():
            values = []
            for annotator, candidates in cells.items():
                if not candidates:
                    continue
                matched = sum(
                    1
                    for c in candidates
                    if candidate_matches(c, criterion, match_subcategory)
                )
                values.append(matched / len(candidates))
                contributing.add(annotator)
            if values:
                pair_values.append(sum(values) / len(values))
        rows.append(
            {
                "scope": pair_scope,
                "setting": setting.value,
                "criterion": criterion.value,
                "language_pair": project.language_pair,
                "mean_percentage": (
                    sum(pair_values) / len(pair_values) if pair_values else ""
                ),
                "n_annotators": len(contributing),
                "n_pairs": len(pair_values),
            }
        )
    return rows
