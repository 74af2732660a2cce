import pytest

from conftest import span, tiny_project
from sxseval.errors import WorkbenchError
from sxseval.model import (
    Category,
    MqmAnnotation,
    SegmentRef,
    Setting,
    Severity,
)
from sxseval.profiling import (
    annotator_outliers,
    conversion_matrix,
    error_distribution,
    match_errors_across_settings,
    score_distribution_export,
)

SEG = SegmentRef("d1", "s1")


def ann(errors, rater="r1", system="sysA", setting=Setting.MQM, partner=None, seg=SEG):
    return MqmAnnotation(
        rater, setting, system, seg, tuple(sorted(errors, key=lambda e: e.sort_key())),
        pair_partner=partner,
    )


def test_distribution_direct_tally():
    errors = [span(0, 2), span(3, 5), span(6, 8)]
    style = [span(0, 2, "Style/Unnatural or Awkward", Severity.MINOR)]
    project = tiny_project(mqm=[ann(errors), ann(style, rater="r2")])
    dist = error_distribution(project, Setting.MQM)
    assert dist.counts[(Category.ACCURACY, Severity.MAJOR)] == 3
    assert dist.counts[(Category.STYLE, Severity.MINOR)] == 1
    assert dist.percentages[(Category.ACCURACY, Severity.MAJOR)] == pytest.approx(0.75)
    assert dist.percentages[(Category.STYLE, Severity.MINOR)] == pytest.approx(0.25)
    assert sum(dist.percentages.values()) == pytest.approx(1.0)


def test_distribution_empty_is_flagged_undefined():
    project = tiny_project(mqm=[ann([])])
    dist = error_distribution(project, Setting.MQM)
    assert dist.total == 0
    assert dist.undefined
    assert dist.percentages == {}


def test_distribution_duplicate_rule_doubles_twice_paired_system():
    # sysA appears in two designated pairs
    project = tiny_project(
        mqm=[ann([span(0, 2)]), ann([span(0, 2)], system="sysB")],
        systems=("sysA", "sysB", "sysC"),
        designated=(("sysA", "sysB"), ("sysA", "sysC")),
    )
    plain = error_distribution(project, Setting.MQM, duplicate_rule=False)
    doubled = error_distribution(project, Setting.MQM, duplicate_rule=True)
    assert plain.counts[(Category.ACCURACY, Severity.MAJOR)] == 2
    # sysA's error counted twice, sysB's once
    assert doubled.counts[(Category.ACCURACY, Severity.MAJOR)] == 3


def test_distribution_ignores_source_side_spans():
    from sxseval.model import Side

    src = span(0, 2, "Source Issue", side=Side.SOURCE)
    project = tiny_project(mqm=[ann([src, span(3, 5)])])
    dist = error_distribution(project, Setting.MQM)
    assert (Category.SOURCE_ISSUE, Severity.MAJOR) not in dist.counts
    assert dist.total == 1


def test_distribution_doubling_preserves_percentages(rng):
    from conftest import random_project

    for _ in range(10):
        project = random_project(rng)
        if not any(a.errors for a in project.mqm_for(Setting.MQM)):
            continue
        base = error_distribution(project, Setting.MQM)
        doubled_project = project.create(
            language_pair=project.language_pair,
            documents=project.documents,
            systems=project.systems,
            units=project.units,
            mqm=list(project.mqm)
            + [
                MqmAnnotation(
                    a.annotator + "_copy", a.setting, a.system, a.segment, a.errors,
                    pair_partner=a.pair_partner,
                )
                for a in project.mqm
            ],
            rr=project.rr,
            designated_pairs=project.designated_pairs,
            annotators=list(project.annotators)
            + [f"{a}_copy" for a in project.annotators],
        )
        doubled = error_distribution(doubled_project, Setting.MQM)
        assert doubled.total == 2 * base.total
        for key, pct in base.percentages.items():
            assert doubled.percentages[key] == pytest.approx(pct, abs=1e-9)


def test_match_identical_span_across_settings():
    shared = span(4, 9)
    project = tiny_project(
        mqm=[
            ann([shared]),
            ann([shared], setting=Setting.SXS_MQM, partner="sysB"),
        ]
    )
    matches = match_errors_across_settings(project, "r1", "sysA")
    assert len(matches) == 1


def test_match_requires_overlap():
    project = tiny_project(
        mqm=[
            ann([span(0, 3)]),
            ann([span(10, 14)], setting=Setting.SXS_MQM, partner="sysB"),
        ]
    )
    assert match_errors_across_settings(project, "r1", "sysA") == []


def test_match_prefers_larger_overlap():
    mqm_span = span(0, 10)
    big = span(2, 7, "Fluency/Grammar", Severity.MINOR)  # overlap 5
    small = span(8, 14, "Style", Severity.MINOR)  # overlap 2
    project = tiny_project(
        mqm=[
            ann([mqm_span]),
            ann([big, small], setting=Setting.SXS_MQM, partner="sysB"),
        ]
    )
    matches = match_errors_across_settings(project, "r1", "sysA")
    assert len(matches) == 1
    assert matches[0][1].category.category == Category.FLUENCY


def test_conversion_matrix_counts_and_conservation():
    keep = span(0, 4)
    convert_from = span(6, 9, "Terminology/Inconsistent", Severity.MINOR)
    convert_to = span(6, 9, "Accuracy/Mistranslation", Severity.MINOR)
    project = tiny_project(
        mqm=[
            ann([keep, convert_from]),
            ann([keep, convert_to], setting=Setting.SXS_MQM, partner="sysB"),
        ]
    )
    matrix = conversion_matrix(project)
    assert matrix.counts[(Category.ACCURACY, Category.ACCURACY)] == 1
    assert matrix.counts[(Category.TERMINOLOGY, Category.ACCURACY)] == 1
    assert matrix.total == 2


def test_conversion_matrix_requires_matches():
    project = tiny_project(mqm=[ann([])])
    with pytest.raises(WorkbenchError) as exc:
        conversion_matrix(project)
    assert exc.value.code == "E_NO_MATCHES"


def _outlier_project(counts: dict[str, int]):
    docs = [("d1", ("s1",))]
    annotations = []
    for rater, count in counts.items():
        errors = [span(0, 2) for _ in range(count)]
        annotations.append(ann(errors, rater=rater, setting=Setting.SXS_MQM, partner="sysB"))
    return tiny_project(
        mqm=annotations, docs=docs, annotators=tuple(counts)
    )


def test_outliers_all_equal_counts():
    project = _outlier_project({"r1": 4, "r2": 4, "r3": 4})
    stats = annotator_outliers(project, Setting.SXS_MQM)
    assert all(s.z == 0.0 for s in stats)
    assert not any(s.flagged for s in stats)


def test_outliers_published_moments_flag_exactly_one():
    counts = {
        f"r{i}": c
        for i, c in enumerate([505, 1015, 1523, 2030, 2540, 3049, 3554, 6915], start=1)
    }
    project = _outlier_project(counts)
    stats = annotator_outliers(project, Setting.SXS_MQM)
    flagged = [s for s in stats if s.flagged]
    assert len(flagged) == 1
    assert flagged[0].error_count == 6915
    assert flagged[0].z == pytest.approx(2.28, abs=0.005)


def test_outliers_pool_of_one_rejected():
    project = _outlier_project({"r1": 3})
    with pytest.raises(WorkbenchError) as exc:
        annotator_outliers(project, Setting.SXS_MQM)
    assert exc.value.code == "E_TOO_FEW"


def test_outlier_zs_have_mean_zero(rng):
    counts = {f"r{i}": rng.randint(0, 50) for i in range(8)}
    project = _outlier_project(counts)
    stats = annotator_outliers(project, Setting.SXS_MQM)
    mean_z = sum(s.z for s in stats) / len(stats)
    assert abs(mean_z) < 1e-9


def test_score_export_rows_and_summaries():
    annotations = [
        ann([], rater="r1"),
        ann([span(0, 4)], rater="r1", seg=SegmentRef("d1", "s2")),
        ann([], rater="r2"),
    ]
    project = tiny_project(mqm=annotations)
    export = score_distribution_export(project, Setting.MQM)
    assert len(export["rows"]) == 3
    names = {row["annotator"] for row in export["rows"]}
    assert names == {"rater-01", "rater-02"}  # anonymized
    first = next(a for a in export["annotators"] if a["annotator"] == "rater-01")
    assert first["mean"] == pytest.approx(2.5)
    assert first["n"] == 2


def test_score_export_empty_setting():
    project = tiny_project()
    export = score_distribution_export(project, Setting.MQM)
    assert export["rows"] == []
    assert export["annotators"] == []
