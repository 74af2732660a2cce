"""Weighted penalty scores for annotations, z-normalization, score tables.

Lower is better everywhere: an error-free segment scores 0, and preference
judgments are stored as penalties in [0, 2] per side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import WorkbenchError
from .model import (
    Category,
    ErrorCategory,
    MQM_SETTINGS,
    MqmAnnotation,
    Project,
    RrJudgment,
    RrValue,
    SegmentRef,
    Setting,
    Severity,
    Side,
)

# Weight scheme: gibberish 25, major 5, minor 1, minor punctuation 0.1.
WEIGHT_NON_TRANSLATION = 25.0
WEIGHT_MAJOR = 5.0
WEIGHT_MINOR = 1.0
WEIGHT_MINOR_PUNCTUATION = 0.1

RR_PENALTIES = {
    RrValue.A_MUCH_BETTER: (0.0, 2.0),
    RrValue.A_BETTER: (0.0, 1.0),
    RrValue.SAME: (0.0, 0.0),
    RrValue.B_BETTER: (1.0, 0.0),
    RrValue.B_MUCH_BETTER: (2.0, 0.0),
}


def error_weight(category: ErrorCategory, severity: Severity) -> float:
    """Penalty points for one error span. Total over all valid inputs."""
    if category.category == Category.SOURCE_ISSUE:
        return 0.0
    if severity == Severity.MAJOR:
        if category.category == Category.NON_TRANSLATION:
            return WEIGHT_NON_TRANSLATION
        return WEIGHT_MAJOR
    if (
        category.category == Category.FLUENCY
        and category.subcategory is not None
        and category.subcategory.value == "Punctuation"
    ):
        return WEIGHT_MINOR_PUNCTUATION
    return WEIGHT_MINOR


def mqm_segment_score(annotation: MqmAnnotation) -> float:
    """Sum of target-side span weights, in the annotation's span order."""
    total = 0.0
    for span in annotation.errors:
        if span.side == Side.TARGET:
            total += error_weight(span.category, span.severity)
    return total


def rr_penalties(judgment: RrJudgment) -> tuple[float, float]:
    return RR_PENALTIES[judgment.value]


@dataclass(frozen=True)
class ScoreCell:
    """One annotator's penalty score for one (system, segment)."""

    system: str
    segment: SegmentRef
    annotator: str
    setting: Setting
    raw: float
    z: float | None = None
    pair_partner: str | None = None


@dataclass(frozen=True)
class ScoreTable:
    setting: Setting
    cells: tuple[ScoreCell, ...]
    segment_scores: dict[tuple[str, SegmentRef], float]
    system_scores: dict[str, float]


def _mean(values) -> float:
    values = list(values)
    return sum(values) / len(values)


def _pstdev(values) -> float:
    values = list(values)
    mu = _mean(values)
    return math.sqrt(sum((v - mu) ** 2 for v in values) / len(values))


def z_normalize(cells: list[ScoreCell], pool_settings: bool = False) -> list[ScoreCell]:
    """Fill ``z`` per (annotator, setting) group; preference cells pass through.

    z = (raw - group mean) / group population std; a zero-variance group gets
    z = 0 for all members. ``pool_settings`` pools an annotator's two
    error-marking settings into one group.
    """
    if not cells:
        raise WorkbenchError("E_EMPTY_GROUP", "no score cells to normalize")
    groups: dict[tuple, list[int]] = {}
    for i, cell in enumerate(cells):
        if cell.setting not in MQM_SETTINGS:
            continue
        key = (cell.annotator,) if pool_settings else (cell.annotator, cell.setting)
        groups.setdefault(key, []).append(i)
    out = list(cells)
    for indices in groups.values():
        raws = [cells[i].raw for i in indices]
        mu = _mean(raws)
        sigma = _pstdev(raws)
        for i in indices:
            z = 0.0 if sigma == 0.0 else (cells[i].raw - mu) / sigma
            out[i] = replace(cells[i], z=z)
    return out


def score_cells(
    project: Project,
    setting: Setting,
    pair: tuple[str, str] | None = None,
) -> list[ScoreCell]:
    """Raw per-annotator cells; ``pair`` restricts side-by-side settings to
    the annotations/judgments collected for that explicit pairing."""
    cells: list[ScoreCell] = []
    if setting in MQM_SETTINGS:
        for a in project.mqm_for(setting):
            if pair is not None and setting == Setting.SXS_MQM:
                if {a.system, a.pair_partner} != set(pair):
                    continue
            cells.append(
                ScoreCell(
                    system=a.system,
                    segment=a.segment,
                    annotator=a.annotator,
                    setting=setting,
                    raw=mqm_segment_score(a),
                    pair_partner=a.pair_partner,
                )
            )
        return cells

    # Preference judgments: penalties accumulate per (system, segment, rater).
    sums: dict[tuple[str, SegmentRef, str], float] = {}
    for j in project.rr:
        if pair is not None and {j.system_a, j.system_b} != set(pair):
            continue
        pen_a, pen_b = rr_penalties(j)
        for system, pen in ((j.system_a, pen_a), (j.system_b, pen_b)):
            key = (system, j.segment, j.annotator)
            sums[key] = sums.get(key, 0.0) + pen
    for (system, segment, annotator), raw in sorted(
        sums.items(), key=lambda kv: (kv[0][1], kv[0][0], kv[0][2])
    ):
        cells.append(ScoreCell(system, segment, annotator, Setting.SXS_RR, raw))
    return cells


def aggregate(setting: Setting, cells: list[ScoreCell], use_z: bool) -> ScoreTable:
    """Segment score = mean over its annotator cells; system = mean over segments."""
    by_unit: dict[tuple[str, SegmentRef], list[float]] = {}
    for cell in cells:
        value = cell.z if (use_z and cell.z is not None) else cell.raw
        by_unit.setdefault((cell.system, cell.segment), []).append(value)
    segment_scores = {key: _mean(vals) for key, vals in by_unit.items()}
    by_system: dict[str, list[float]] = {}
    for (system, _), score in segment_scores.items():
        by_system.setdefault(system, []).append(score)
    system_scores = {system: _mean(vals) for system, vals in by_system.items()}
    return ScoreTable(setting, tuple(cells), segment_scores, system_scores)


def build_score_table(project: Project, setting: Setting, use_z: bool = False) -> ScoreTable:
    """Full score table for one setting (no pair restriction)."""
    cells = score_cells(project, setting)
    if not cells:
        raise WorkbenchError("E_NO_ANNOTATIONS", f"no annotations for {setting.value}")
    if use_z and setting in MQM_SETTINGS:
        cells = z_normalize(cells)
    return aggregate(setting, cells, use_z)


def exclude_annotators(project: Project, ids) -> Project:
    """Drop the given annotators; segments that lose all coverage in any
    active setting are removed everywhere to keep settings comparable."""
    ids = set(ids)
    unknown = ids - set(project.annotators)
    if unknown:
        raise WorkbenchError(
            "E_UNKNOWN_ANNOTATOR", f"not project annotators: {sorted(unknown)}"
        )
    if not ids:
        return project

    mqm = [a for a in project.mqm if a.annotator not in ids]
    rr = [j for j in project.rr if j.annotator not in ids]

    active = [s for s in (Setting.MQM, Setting.SXS_MQM) if project.has_setting(s)]
    rr_active = project.has_setting(Setting.SXS_RR)
    covered: dict[Setting, set[SegmentRef]] = {s: set() for s in active}
    for a in mqm:
        if a.setting in covered:
            covered[a.setting].add(a.segment)
    rr_covered = {j.segment for j in rr}

    keep: set[SegmentRef] = set()
    for seg in project.segments:
        if any(seg not in covered[s] for s in active):
            continue
        if rr_active and seg not in rr_covered:
            continue
        keep.add(seg)

    documents = []
    for doc_id, seg_ids in project.documents:
        kept = tuple(s for s in seg_ids if SegmentRef(doc_id, s) in keep)
        if kept:
            documents.append((doc_id, kept))
    return Project.create(
        language_pair=project.language_pair,
        documents=documents,
        systems=project.systems,
        units=[u for u in project.units if u.segment in keep],
        mqm=[a for a in mqm if a.segment in keep],
        rr=[j for j in rr if j.segment in keep],
        designated_pairs=project.designated_pairs,
        annotators=project.annotators - ids,
    )


def score_table_rows(table: ScoreTable) -> list[dict]:
    """Flat export rows: setting, system, doc_id, seg_id, rater, raw, z."""
    rows = []
    for cell in table.cells:
        rows.append(
            {
                "setting": cell.setting.value,
                "system": cell.system,
                "doc_id": cell.segment.doc_id,
                "seg_id": cell.segment.seg_id,
                "rater": cell.annotator,
                "raw": cell.raw,
                "z": "" if cell.z is None else cell.z,
            }
        )
    return rows
