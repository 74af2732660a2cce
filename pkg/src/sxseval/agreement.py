"""Inter-annotator agreement over pairwise comparison labels.

Every (segment, designated system pair) is a unit; each annotator's verdict
collapses to one of {a better, tie, b better}. Agreement is nominal
Krippendorff's alpha computed from the coincidence matrix, which tolerates
missing labels.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import WorkbenchError
from .model import (
    ComparisonLabel,
    MQM_SETTINGS,
    Project,
    RrValue,
    SegmentRef,
    Setting,
)
from .scoring import mqm_segment_score, z_normalize, score_cells

Unit = tuple[SegmentRef, str, str]

RR_TO_LABEL = {
    RrValue.A_MUCH_BETTER: ComparisonLabel.A_BETTER,
    RrValue.A_BETTER: ComparisonLabel.A_BETTER,
    RrValue.SAME: ComparisonLabel.TIE,
    RrValue.B_BETTER: ComparisonLabel.B_BETTER,
    RrValue.B_MUCH_BETTER: ComparisonLabel.B_BETTER,
}


def comparison_label(score_a: float, score_b: float) -> ComparisonLabel:
    """Lower penalty wins; exact equality is a tie."""
    if score_a < score_b:
        return ComparisonLabel.A_BETTER
    if score_a > score_b:
        return ComparisonLabel.B_BETTER
    return ComparisonLabel.TIE


@dataclass(frozen=True)
class LabelMatrix:
    units: tuple[Unit, ...]
    labels: dict[tuple[Unit, str], ComparisonLabel]

    def unit_labels(self, unit: Unit) -> list[ComparisonLabel]:
        return [
            label for (u, _), label in self.labels.items() if u == unit
        ]


@dataclass(frozen=True)
class AgreementResult:
    alpha: float
    n_units: int
    n_labels: int


def _mqm_scores_by_annotator(
    project: Project, setting: Setting, use_z: bool
) -> dict[tuple[str, str, SegmentRef, str | None], float]:
    """(annotator, system, segment, partner) -> score for label building."""
    cells = score_cells(project, setting)
    if use_z:
        cells = z_normalize(cells)
    out = {}
    for cell in cells:
        value = cell.z if use_z else cell.raw
        out[(cell.annotator, cell.system, cell.segment, cell.pair_partner)] = value
    return out


def build_label_matrix(
    project: Project, setting: Setting, use_z: bool = False
) -> LabelMatrix:
    """One unit per (segment, designated pair); labels for every annotator
    with evidence on both sides. MQM-setting ties compare raw scores unless
    ``use_z`` is set."""
    if not project.designated_pairs:
        raise WorkbenchError("E_NO_PAIRS", "project has no designated pairs")

    labels: dict[tuple[Unit, str], ComparisonLabel] = {}
    units: list[Unit] = []

    if setting == Setting.SXS_RR:
        found: dict[tuple[Unit, str], ComparisonLabel] = {}
        for j in project.rr:
            for a, b in project.designated_pairs:
                if {j.system_a, j.system_b} != {a, b}:
                    continue
                value = j.value if j.system_a == a else j.value.flipped()
                found[((j.segment, a, b), j.annotator)] = RR_TO_LABEL[value]
        labels = found
    else:
        scores = _mqm_scores_by_annotator(project, setting, use_z)
        annotators = sorted(project.annotators)
        for a, b in project.designated_pairs:
            for seg in project.segments:
                for rater in annotators:
                    if setting == Setting.SXS_MQM:
                        sa = scores.get((rater, a, seg, b))
                        sb = scores.get((rater, b, seg, a))
                    else:
                        sa = scores.get((rater, a, seg, None))
                        sb = scores.get((rater, b, seg, None))
                    if sa is None or sb is None:
                        continue
                    labels[((seg, a, b), rater)] = comparison_label(sa, sb)

    labelled = {u for u, _ in labels}
    seen = set()
    for a, b in project.designated_pairs:
        for seg in project.segments:
            unit = (seg, a, b)
            if unit not in seen and unit in labelled:
                units.append(unit)
                seen.add(unit)
    return LabelMatrix(tuple(units), labels)


def krippendorff_alpha(matrix: LabelMatrix) -> AgreementResult:
    """Nominal-data alpha = 1 - D_o/D_e from the coincidence matrix.

    Each ordered label pair within a unit of m >= 2 labels adds 1/(m-1) to
    its coincidence cell; D_o sums the off-diagonal mass and
    D_e = sum_{c != k} n_c * n_k / (n - 1) over the label totals.
    """
    per_unit: dict[Unit, list[ComparisonLabel]] = {u: [] for u in matrix.units}
    for (unit, _), label in matrix.labels.items():
        per_unit.setdefault(unit, []).append(label)

    categories = [ComparisonLabel.A_BETTER, ComparisonLabel.TIE, ComparisonLabel.B_BETTER]
    index = {c: i for i, c in enumerate(categories)}
    coincidence = [[0.0] * len(categories) for _ in categories]
    n_units = 0
    for unit_labels in per_unit.values():
        m = len(unit_labels)
        if m < 2:
            continue
        n_units += 1
        for i, li in enumerate(unit_labels):
            for j, lj in enumerate(unit_labels):
                if i == j:
                    continue
                coincidence[index[li]][index[lj]] += 1.0 / (m - 1)

    n_labels = sum(len(labels) for labels in per_unit.values() if len(labels) >= 2)
    totals = [sum(row) for row in coincidence]
    n = sum(totals)
    if n_labels < 2:
        raise WorkbenchError(
            "E_DEGENERATE", "fewer than two pairable labels", {"n_labels": n_labels}
        )
    d_o = sum(
        coincidence[c][k]
        for c in range(len(categories))
        for k in range(len(categories))
        if c != k
    )
    d_e = sum(
        totals[c] * totals[k]
        for c in range(len(categories))
        for k in range(len(categories))
        if c != k
    ) / (n - 1)
    if d_e == 0:
        raise WorkbenchError(
            "E_DEGENERATE",
            "all labels fall in a single category; alpha undefined",
            {"n_labels": n},
        )
    return AgreementResult(alpha=1.0 - d_o / d_e, n_units=n_units, n_labels=n_labels)


def tie_rate(matrix: LabelMatrix) -> float:
    if not matrix.labels:
        raise WorkbenchError("E_EMPTY", "label matrix has no labels")
    ties = sum(1 for label in matrix.labels.values() if label == ComparisonLabel.TIE)
    return ties / len(matrix.labels)


def length_buckets(
    project: Project, k: int, side_rule: str = "target"
) -> list[list[SegmentRef]]:
    """Split segments into k groups by ascending whitespace token count.

    ``side_rule``: "source" counts the shared source; "target" counts the
    mean over systems' targets (stand-in for a reference translation when
    the target language is the one to measure). Group sizes differ by at
    most one, earlier groups taking the remainder.
    """
    if k < 1:
        raise WorkbenchError("E_EMPTY", "k must be at least 1")
    segments = list(project.segments)
    if not segments:
        raise WorkbenchError("E_EMPTY", "project has no segments")

    def count(seg: SegmentRef) -> float:
        units = [u for u in project.units if u.segment == seg]
        if not units:
            return 0.0
        if side_rule == "source":
            return float(len(units[0].source.split()))
        return sum(len(u.target.split()) for u in units) / len(units)

    ordered = sorted(segments, key=lambda s: (count(s), project.segment_order[s]))
    n = len(ordered)
    base, extra = divmod(n, k)
    groups = []
    start = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        groups.append(ordered[start : start + size])
        start += size
    return groups


def restrict_matrix(matrix: LabelMatrix, segments) -> LabelMatrix:
    """Sub-matrix over the given segments (for per-bucket or per-pair alpha)."""
    segset = set(segments)
    units = tuple(u for u in matrix.units if u[0] in segset)
    unitset = set(units)
    labels = {
        (u, rater): label for (u, rater), label in matrix.labels.items() if u in unitset
    }
    return LabelMatrix(units, labels)


def restrict_matrix_pairs(matrix: LabelMatrix, pairs) -> LabelMatrix:
    pairset = {frozenset(p) for p in pairs}
    units = tuple(u for u in matrix.units if frozenset((u[1], u[2])) in pairset)
    unitset = set(units)
    labels = {
        (u, rater): label for (u, rater), label in matrix.labels.items() if u in unitset
    }
    return LabelMatrix(units, labels)
