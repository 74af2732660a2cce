"""Immutable domain types and project-level validation.

All text is NFC-normalized and character offsets count Unicode scalar values
on the clean (marker-free) text. Validation never raises: violations are
data, returned as a sorted list of coded entries.
"""

from __future__ import annotations

import enum
import re
import unicodedata
from dataclasses import dataclass
from functools import cached_property

from .errors import WorkbenchError

SPAN_OPEN = "<v>"
SPAN_CLOSE = "</v>"


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


class Category(str, enum.Enum):
    ACCURACY = "Accuracy"
    FLUENCY = "Fluency"
    STYLE = "Style"
    TERMINOLOGY = "Terminology"
    LOCALE_CONVENTION = "Locale Convention"
    NON_TRANSLATION = "Non-Translation"
    OTHER = "Other"
    SOURCE_ISSUE = "Source Issue"


class Subcategory(str, enum.Enum):
    # Accuracy
    REINTERPRETATION = "Reinterpretation"
    MISTRANSLATION = "Mistranslation"
    GENDER_MISMATCH = "Gender Mismatch"
    UNTRANSLATED = "Untranslated"
    ADDITION = "Addition"
    OMISSION = "Omission"
    # Fluency
    INCONSISTENCY = "Inconsistency"
    GRAMMAR = "Grammar"
    REGISTER = "Register"
    SPELLING = "Spelling"
    TEXT_BREAKING = "Text-Breaking"
    PUNCTUATION = "Punctuation"
    CHARACTER_ENCODING = "Character Encoding"
    # Style
    UNNATURAL_OR_AWKWARD = "Unnatural or Awkward"
    BAD_SENTENCE_STRUCTURE = "Bad Sentence Structure"
    ARCHAIC_OR_OBSCURE_WORD_CHOICE = "Archaic or Obscure Word Choice"
    # Terminology
    INAPPROPRIATE_FOR_CONTEXT = "Inappropriate for Context"
    INCONSISTENT = "Inconsistent"
    # Locale Convention
    ADDRESS_FORMAT = "Address Format"
    DATE_FORMAT = "Date Format"
    CURRENCY_FORMAT = "Currency Format"
    TELEPHONE_FORMAT = "Telephone Format"
    TIME_FORMAT = "Time Format"
    NAME_FORMAT = "Name Format"


SUBCATEGORIES: dict[Category, tuple[Subcategory, ...]] = {
    Category.ACCURACY: (
        Subcategory.REINTERPRETATION,
        Subcategory.MISTRANSLATION,
        Subcategory.GENDER_MISMATCH,
        Subcategory.UNTRANSLATED,
        Subcategory.ADDITION,
        Subcategory.OMISSION,
    ),
    Category.FLUENCY: (
        Subcategory.INCONSISTENCY,
        Subcategory.GRAMMAR,
        Subcategory.REGISTER,
        Subcategory.SPELLING,
        Subcategory.TEXT_BREAKING,
        Subcategory.PUNCTUATION,
        Subcategory.CHARACTER_ENCODING,
    ),
    Category.STYLE: (
        Subcategory.UNNATURAL_OR_AWKWARD,
        Subcategory.BAD_SENTENCE_STRUCTURE,
        Subcategory.ARCHAIC_OR_OBSCURE_WORD_CHOICE,
    ),
    Category.TERMINOLOGY: (
        Subcategory.INAPPROPRIATE_FOR_CONTEXT,
        Subcategory.INCONSISTENT,
    ),
    Category.LOCALE_CONVENTION: (
        Subcategory.ADDRESS_FORMAT,
        Subcategory.DATE_FORMAT,
        Subcategory.CURRENCY_FORMAT,
        Subcategory.TELEPHONE_FORMAT,
        Subcategory.TIME_FORMAT,
        Subcategory.NAME_FORMAT,
    ),
    Category.NON_TRANSLATION: (),
    Category.OTHER: (),
    Category.SOURCE_ISSUE: (),
}


def _norm_key(part: str) -> str:
    return re.sub(r"[^a-z0-9]", "", part.lower())


_CATEGORY_BY_KEY = {_norm_key(c.value): c for c in Category}
_SUBCATEGORY_BY_KEY: dict[tuple[Category, str], Subcategory] = {
    (cat, _norm_key(sub.value)): sub
    for cat, subs in SUBCATEGORIES.items()
    for sub in subs
}


@dataclass(frozen=True, order=True)
class ErrorCategory:
    """A category path such as Accuracy/Mistranslation or Non-Translation."""

    category: Category
    subcategory: Subcategory | None = None

    def path(self) -> str:
        if self.subcategory is None:
            return self.category.value
        return f"{self.category.value}/{self.subcategory.value}"

    @classmethod
    def parse(cls, path: str) -> "ErrorCategory":
        """Parse a '/'-separated path, case- and punctuation-insensitively."""
        parts = [p for p in path.split("/") if p.strip()]
        if not parts:
            raise WorkbenchError("E_UNKNOWN_CATEGORY", f"empty category path {path!r}")
        cat = _CATEGORY_BY_KEY.get(_norm_key(parts[0]))
        if cat is None:
            raise WorkbenchError("E_UNKNOWN_CATEGORY", f"unknown category {path!r}")
        if len(parts) == 1:
            return cls(cat)
        if len(parts) > 2:
            raise WorkbenchError("E_UNKNOWN_CATEGORY", f"too many levels in {path!r}")
        sub = _SUBCATEGORY_BY_KEY.get((cat, _norm_key(parts[1])))
        if sub is None:
            raise WorkbenchError(
                "E_UNKNOWN_CATEGORY", f"unknown subcategory in {path!r}"
            )
        return cls(cat, sub)


class Severity(str, enum.Enum):
    MAJOR = "major"
    MINOR = "minor"

    @classmethod
    def parse(cls, text: str) -> "Severity":
        key = text.strip().lower()
        if key == "major":
            return cls.MAJOR
        if key == "minor":
            return cls.MINOR
        raise WorkbenchError("E_SEVERITY_PARSE", f"unknown severity {text!r}")


class Side(str, enum.Enum):
    SOURCE = "source"
    TARGET = "target"


class Setting(str, enum.Enum):
    MQM = "mqm"
    SXS_MQM = "sxs_mqm"
    SXS_RR = "sxs_rr"


MQM_SETTINGS = (Setting.MQM, Setting.SXS_MQM)


class RrValue(str, enum.Enum):
    A_MUCH_BETTER = "a_much_better"
    A_BETTER = "a_better"
    SAME = "same"
    B_BETTER = "b_better"
    B_MUCH_BETTER = "b_much_better"

    @classmethod
    def parse(cls, text: str) -> "RrValue":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise WorkbenchError("E_BAD_VALUE", f"unknown judgment value {text!r}")

    def flipped(self) -> "RrValue":
        order = [
            RrValue.A_MUCH_BETTER,
            RrValue.A_BETTER,
            RrValue.SAME,
            RrValue.B_BETTER,
            RrValue.B_MUCH_BETTER,
        ]
        return order[len(order) - 1 - order.index(self)]


class ComparisonLabel(str, enum.Enum):
    A_BETTER = "a_better"
    TIE = "tie"
    B_BETTER = "b_better"


@dataclass(frozen=True, order=True)
class SegmentRef:
    doc_id: str
    seg_id: str


@dataclass(frozen=True)
class TranslationUnit:
    """One system's clean (marker-free) translation of one segment."""

    system: str
    segment: SegmentRef
    source: str
    target: str


@dataclass(frozen=True)
class ErrorSpan:
    """One marked error. Offsets index the clean text of ``side``.

    start == end == 0 with ``unspecified_span`` marks a whole-segment error
    that has no identifiable span; such errors are scored but never matched
    by span-based analyses.
    """

    side: Side
    start: int
    end: int
    category: ErrorCategory
    severity: Severity
    unspecified_span: bool = False

    def sort_key(self) -> tuple:
        return (self.side.value, self.start, self.end, self.category, self.severity)


@dataclass(frozen=True)
class MqmAnnotation:
    """One annotator's complete error list for one translation unit.

    An empty error tuple means the annotator judged the segment error-free.
    ``pair_partner`` is the other system shown alongside (side-by-side
    setting only).
    """

    annotator: str
    setting: Setting
    system: str
    segment: SegmentRef
    errors: tuple[ErrorSpan, ...]
    pair_partner: str | None = None


@dataclass(frozen=True)
class RrJudgment:
    """One annotator's five-point preference between two translations."""

    annotator: str
    segment: SegmentRef
    system_a: str
    system_b: str
    value: RrValue


@dataclass(frozen=True)
class PraCounts:
    concordant: int
    discordant: int
    tied_only_alpha: int
    tied_only_beta: int
    tied_both: int

    @property
    def total(self) -> int:
        return (
            self.concordant
            + self.discordant
            + self.tied_only_alpha
            + self.tied_only_beta
            + self.tied_both
        )


@dataclass(frozen=True)
class Violation:
    code: str
    where: str
    message: str


@dataclass(frozen=True)
class Project:
    """A full annotation campaign, canonically ordered.

    Use :meth:`create` so that unit/annotation ordering is canonical; two
    projects holding the same data then compare equal.
    """

    language_pair: str
    documents: tuple[tuple[str, tuple[str, ...]], ...]
    systems: frozenset[str]
    units: tuple[TranslationUnit, ...]
    mqm: tuple[MqmAnnotation, ...]
    rr: tuple[RrJudgment, ...]
    designated_pairs: tuple[tuple[str, str], ...]
    annotators: frozenset[str]

    @classmethod
    def create(
        cls,
        language_pair: str,
        documents,
        systems,
        units,
        mqm=(),
        rr=(),
        designated_pairs=(),
        annotators=(),
    ) -> "Project":
        docs = tuple((d, tuple(segs)) for d, segs in documents)
        order: dict[SegmentRef, tuple[int, int]] = {}
        for di, (doc_id, segs) in enumerate(docs):
            for si, seg_id in enumerate(segs):
                order[SegmentRef(doc_id, seg_id)] = (di, si)

        def seg_key(seg: SegmentRef) -> tuple:
            # unknown segments sort after known ones, by raw ids
            if seg in order:
                return (0, order[seg])
            return (1, (seg.doc_id, seg.seg_id))

        units_sorted = tuple(
            sorted(units, key=lambda u: (seg_key(u.segment), u.system))
        )
        mqm_sorted = tuple(
            sorted(
                mqm,
                key=lambda a: (
                    a.setting.value,
                    seg_key(a.segment),
                    a.system,
                    a.pair_partner or "",
                    a.annotator,
                ),
            )
        )
        rr_sorted = tuple(
            sorted(
                rr,
                key=lambda j: (seg_key(j.segment), j.system_a, j.system_b, j.annotator),
            )
        )
        return cls(
            language_pair=language_pair,
            documents=docs,
            systems=frozenset(systems),
            units=units_sorted,
            mqm=mqm_sorted,
            rr=rr_sorted,
            designated_pairs=tuple((a, b) for a, b in designated_pairs),
            annotators=frozenset(annotators),
        )

    @cached_property
    def segment_order(self) -> dict[SegmentRef, tuple[int, int]]:
        out: dict[SegmentRef, tuple[int, int]] = {}
        for di, (doc_id, segs) in enumerate(self.documents):
            for si, seg_id in enumerate(segs):
                out[SegmentRef(doc_id, seg_id)] = (di, si)
        return out

    @cached_property
    def segments(self) -> tuple[SegmentRef, ...]:
        return tuple(
            SegmentRef(d, s) for d, segs in self.documents for s in segs
        )

    @cached_property
    def unit_map(self) -> dict[tuple[str, SegmentRef], TranslationUnit]:
        return {(u.system, u.segment): u for u in self.units}

    def mqm_for(self, setting: Setting) -> tuple[MqmAnnotation, ...]:
        return tuple(a for a in self.mqm if a.setting == setting)

    def has_setting(self, setting: Setting) -> bool:
        if setting == Setting.SXS_RR:
            return bool(self.rr)
        return any(a.setting == setting for a in self.mqm)


def check_span(
    span: ErrorSpan, unit: TranslationUnit, where: str, out: list[Violation]
) -> None:
    """Append violations of the span invariants against its unit's text."""
    text = unit.source if span.side == Side.SOURCE else unit.target
    if not (0 <= span.start <= span.end <= len(text)):
        out.append(Violation("E_SPAN_BOUNDS", where, "span outside text bounds"))
    if span.unspecified_span:
        if span.start != 0 or span.end != 0:
            out.append(
                Violation("E_SPAN_EMPTY", where, "unspecified span must be (0, 0)")
            )
    elif span.start == span.end:
        out.append(
            Violation(
                "E_SPAN_EMPTY", where, "empty span without unspecified_span flag"
            )
        )
    if (span.side == Side.SOURCE) != (span.category.category == Category.SOURCE_ISSUE):
        out.append(
            Violation(
                "E_SIDE_CATEGORY", where, "source side if and only if Source Issue"
            )
        )
    if span.category.category == Category.NON_TRANSLATION and (
        span.severity != Severity.MAJOR
    ):
        out.append(
            Violation(
                "E_SEVERITY_NONTRANSLATION", where, "Non-Translation is always major"
            )
        )
    sub = span.category.subcategory
    if sub is not None and sub not in SUBCATEGORIES[span.category.category]:
        out.append(
            Violation("E_SUBCATEGORY", where, "subcategory outside its category")
        )


def validate_project(project: Project) -> list[Violation]:
    """Check every type invariant; one entry per violation, sorted, stable."""
    out: list[Violation] = []
    seen_segments: set[SegmentRef] = set()
    for doc_id, seg_ids in project.documents:
        if not doc_id:
            out.append(Violation("E_SEGMENT_REF", f"doc={doc_id!r}", "empty doc_id"))
        for seg_id in seg_ids:
            if not seg_id:
                out.append(
                    Violation(
                        "E_SEGMENT_REF", f"doc={doc_id} seg={seg_id!r}", "empty seg_id"
                    )
                )
            ref = SegmentRef(doc_id, seg_id)
            if ref in seen_segments:
                out.append(
                    Violation(
                        "E_SEGMENT_DUP",
                        f"doc={doc_id} seg={seg_id}",
                        "duplicate (doc_id, seg_id)",
                    )
                )
            seen_segments.add(ref)

    seen_units: set[tuple[str, SegmentRef]] = set()
    for u in project.units:
        where = f"system={u.system} doc={u.segment.doc_id} seg={u.segment.seg_id}"
        key = (u.system, u.segment)
        if key in seen_units:
            out.append(Violation("E_UNIT_DUP", where, "duplicate unit"))
        seen_units.add(key)
        if u.segment not in seen_segments:
            out.append(Violation("E_UNIT_UNKNOWN_SEGMENT", where, "segment not listed"))
        if u.system not in project.systems:
            out.append(Violation("E_UNIT_UNKNOWN_SYSTEM", where, "system not listed"))
        if SPAN_OPEN in u.target or SPAN_CLOSE in u.target:
            out.append(
                Violation("E_MARKER_IN_TARGET", where, "span markers in clean text")
            )

    unit_map = {(u.system, u.segment): u for u in project.units}
    for a in project.mqm:
        where = (
            f"setting={a.setting.value} system={a.system}"
            f" doc={a.segment.doc_id} seg={a.segment.seg_id} rater={a.annotator}"
        )
        if a.setting not in MQM_SETTINGS:
            out.append(Violation("E_SETTING", where, "not an error-marking setting"))
        if a.annotator not in project.annotators:
            out.append(
                Violation("E_UNKNOWN_ANNOTATOR", where, "annotator not listed")
            )
        if (a.pair_partner is None) == (a.setting == Setting.SXS_MQM):
            out.append(
                Violation(
                    "E_PAIR_PARTNER",
                    where,
                    "pair_partner required exactly for side-by-side annotation",
                )
            )
        if a.pair_partner is not None and a.pair_partner == a.system:
            out.append(Violation("E_PAIR_PARTNER", where, "partner equals system"))
        unit = unit_map.get((a.system, a.segment))
        if unit is None:
            out.append(Violation("E_UNKNOWN_UNIT", where, "no such translation unit"))
        if list(a.errors) != sorted(a.errors, key=ErrorSpan.sort_key):
            out.append(Violation("E_ERRORS_UNSORTED", where, "errors not in span order"))
        if unit is not None:
            for i, span in enumerate(a.errors):
                check_span(span, unit, f"{where} span={i}", out)

    for j in project.rr:
        where = (
            f"doc={j.segment.doc_id} seg={j.segment.seg_id}"
            f" pair={j.system_a}/{j.system_b} rater={j.annotator}"
        )
        if j.system_a == j.system_b:
            out.append(Violation("E_SELF_PAIR", where, "judgment compares a system to itself"))
        if j.annotator not in project.annotators:
            out.append(Violation("E_UNKNOWN_ANNOTATOR", where, "annotator not listed"))
        for system in (j.system_a, j.system_b):
            if (system, j.segment) not in unit_map:
                out.append(
                    Violation("E_UNKNOWN_UNIT", where, f"no unit for {system}")
                )

    for a, b in project.designated_pairs:
        if a not in project.systems or b not in project.systems:
            out.append(
                Violation(
                    "E_UNKNOWN_SYSTEM", f"pair={a}/{b}", "designated pair outside systems"
                )
            )
        if a == b:
            out.append(Violation("E_SELF_PAIR", f"pair={a}/{b}", "self-pair designated"))

    return sorted(out, key=lambda v: (v.code, v.where, v.message))
