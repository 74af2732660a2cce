"""Error profiling: category/severity distributions, cross-setting category
conversion, outlier annotators, and score-distribution exports."""

from __future__ import annotations

import statistics
from dataclasses import dataclass

from .errors import WorkbenchError
from .model import (
    Category,
    ErrorSpan,
    Project,
    Setting,
    Severity,
    Side,
)
from .scoring import build_score_table


@dataclass(frozen=True)
class ErrorDistribution:
    setting: Setting
    counts: dict[tuple[Category, Severity], int]
    percentages: dict[tuple[Category, Severity], float]
    total: int

    @property
    def undefined(self) -> bool:
        return self.total == 0


def _pair_multiplicity(project: Project, system: str) -> int:
    return sum(1 for pair in project.designated_pairs if system in pair)


def error_distribution(
    project: Project, setting: Setting, duplicate_rule: bool = False
) -> ErrorDistribution:
    """Tally target-side spans by (top-level category, severity).

    With ``duplicate_rule`` on, a system that sits in two side-by-side pairs
    gets its single-sided counts multiplied accordingly, so the two settings
    tally comparable volumes.
    """
    if setting not in (Setting.MQM, Setting.SXS_MQM):
        raise WorkbenchError("E_SETTING", f"{setting.value} carries no error spans")
    counts: dict[tuple[Category, Severity], int] = {}
    for a in project.mqm_for(setting):
        weight = 1
        if duplicate_rule and setting == Setting.MQM:
            weight = max(1, _pair_multiplicity(project, a.system))
        for span in a.errors:
            if span.side != Side.TARGET:
                continue
            key = (span.category.category, span.severity)
            counts[key] = counts.get(key, 0) + weight
    total = sum(counts.values())
    percentages = (
        {key: count / total for key, count in counts.items()} if total else {}
    )
    return ErrorDistribution(setting, counts, percentages, total)


def _real_target_spans(errors) -> list[ErrorSpan]:
    return [e for e in errors if e.side == Side.TARGET and not e.unspecified_span]


def _overlap(a: ErrorSpan, b: ErrorSpan) -> int:
    return max(0, min(a.end, b.end) - max(a.start, b.start))


def match_errors_across_settings(
    project: Project, annotator: str, system: str
) -> list[tuple[ErrorSpan, ErrorSpan]]:
    """Greedy maximum-character-overlap matching of one annotator's
    single-sided spans against their side-by-side spans, per segment.

    Each span is used at most once per side-by-side occurrence; when the
    system sits in two pairs, the single-sided spans are matched once per
    occurrence (the duplication used by cross-setting comparisons).
    """
    mqm_by_seg: dict = {}
    sxs_by_seg: dict = {}
    for a in project.mqm:
        if a.annotator != annotator or a.system != system:
            continue
        if a.setting == Setting.MQM:
            mqm_by_seg[a.segment] = _real_target_spans(a.errors)
        elif a.setting == Setting.SXS_MQM:
            sxs_by_seg.setdefault(a.segment, []).append(
                (a.pair_partner or "", _real_target_spans(a.errors))
            )

    matches: list[tuple[ErrorSpan, ErrorSpan]] = []
    for seg in project.segments:
        mqm_spans = mqm_by_seg.get(seg)
        if not mqm_spans:
            continue
        for _, sxs_spans in sorted(sxs_by_seg.get(seg, []), key=lambda t: t[0]):
            pairs = [
                (_overlap(m, s), m.start, s.start, mi, si)
                for mi, m in enumerate(mqm_spans)
                for si, s in enumerate(sxs_spans)
                if _overlap(m, s) > 0
            ]
            pairs.sort(key=lambda t: (-t[0], t[1], t[2]))
            used_m: set[int] = set()
            used_s: set[int] = set()
            for _, _, _, mi, si in pairs:
                if mi in used_m or si in used_s:
                    continue
                used_m.add(mi)
                used_s.add(si)
                matches.append((mqm_spans[mi], sxs_spans[si]))
    return matches


@dataclass(frozen=True)
class ConversionMatrix:
    counts: dict[tuple[Category, Category], int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def conversion_matrix(project: Project) -> ConversionMatrix:
    """Category conversion between settings over all matched error pairs;
    the diagonal is stable categorization."""
    counts: dict[tuple[Category, Category], int] = {}
    systems = sorted({a.system for a in project.mqm})
    for annotator in sorted(project.annotators):
        for system in systems:
            for mqm_err, sxs_err in match_errors_across_settings(
                project, annotator, system
            ):
                key = (mqm_err.category.category, sxs_err.category.category)
                counts[key] = counts.get(key, 0) + 1
    if not counts:
        raise WorkbenchError("E_NO_MATCHES", "no cross-setting error matches")
    return ConversionMatrix(counts)


@dataclass(frozen=True)
class AnnotatorStats:
    annotator: str
    setting: Setting
    error_count: int
    z: float
    flagged: bool


def annotator_outliers(project: Project, setting: Setting) -> list[AnnotatorStats]:
    """Standardize per-annotator total error counts; flag anyone more than
    two standard deviations above the pool mean."""
    counts: dict[str, int] = {}
    for a in project.mqm_for(setting):
        counts[a.annotator] = counts.get(a.annotator, 0) + len(a.errors)
    if len(counts) < 2:
        raise WorkbenchError(
            "E_TOO_FEW", f"need at least 2 annotators in {setting.value}"
        )
    values = list(counts.values())
    mean = sum(values) / len(values)
    std = statistics.pstdev(values)
    out = []
    for annotator in sorted(counts):
        z = 0.0 if std == 0 else (counts[annotator] - mean) / std
        out.append(
            AnnotatorStats(
                annotator=annotator,
                setting=setting,
                error_count=counts[annotator],
                z=z,
                flagged=z > 2,
            )
        )
    return out


def score_distribution_export(project: Project, setting: Setting) -> dict:
    """Raw per-annotator segment scores plus summaries, the data behind
    per-annotator violin plots. Annotator identities are replaced with
    stable positional labels."""
    try:
        table = build_score_table(project, setting, use_z=False)
    except WorkbenchError as exc:
        if exc.code == "E_NO_ANNOTATIONS":
            return {"setting": setting.value, "annotators": [], "rows": []}
        raise
    ids = sorted({cell.annotator for cell in table.cells})
    label = {annotator: f"rater-{i + 1:02d}" for i, annotator in enumerate(ids)}
    rows = []
    samples: dict[str, list[float]] = {}
    for cell in table.cells:
        rows.append(
            {
                "annotator": label[cell.annotator],
                "system": cell.system,
                "doc_id": cell.segment.doc_id,
                "seg_id": cell.segment.seg_id,
                "raw": cell.raw,
            }
        )
    for cell in table.cells:
        samples.setdefault(label[cell.annotator], []).append(cell.raw)
    annotators = []
    for name in sorted(samples):
        scores = sorted(samples[name])
        q1, _, q3 = (
            statistics.quantiles(scores, n=4, method="inclusive")
            if len(scores) > 1
            else (scores[0], scores[0], scores[0])
        )
        annotators.append(
            {
                "annotator": name,
                "n": len(scores),
                "mean": sum(scores) / len(scores),
                "median": statistics.median(scores),
                "q1": q1,
                "q3": q3,
            }
        )
    return {"setting": setting.value, "annotators": annotators, "rows": rows}
