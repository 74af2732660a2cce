"""Shared builders: small deterministic projects and randomized generators."""

from __future__ import annotations

import random

import pytest

from sxseval.model import (
    Category,
    ErrorCategory,
    ErrorSpan,
    MqmAnnotation,
    Project,
    RrJudgment,
    RrValue,
    SegmentRef,
    Setting,
    Severity,
    Side,
    Subcategory,
    SUBCATEGORIES,
    TranslationUnit,
    nfc,
)

WORDS = (
    "the quick brown fox jumps over lazy dog small river bright morning "
    "coffee beans arabica brazil largest producer variety naïve straße "
    "airport train station 空港 駅 big red house green tree".split()
)


def seg(doc: str, s: str) -> SegmentRef:
    return SegmentRef(doc, s)


def span(
    start: int,
    end: int,
    category: str = "Accuracy/Mistranslation",
    severity: Severity = Severity.MAJOR,
    side: Side = Side.TARGET,
    unspecified: bool = False,
) -> ErrorSpan:
    return ErrorSpan(
        side=side,
        start=start,
        end=end,
        category=ErrorCategory.parse(category),
        severity=severity,
        unspecified_span=unspecified,
    )


def tiny_project(
    mqm=(),
    rr=(),
    systems=("sysA", "sysB"),
    annotators=("r1", "r2", "r3"),
    designated=(("sysA", "sysB"),),
    docs=None,
    targets=None,
) -> Project:
    """One or two documents, fixed texts unless overridden."""
    if docs is None:
        docs = [("d1", ("s1", "s2"))]
    units = []
    for doc_id, seg_ids in docs:
        for seg_id in seg_ids:
            for system in systems:
                source = f"source text of {doc_id} {seg_id}"
                target = (
                    targets.get((system, doc_id, seg_id))
                    if targets and (system, doc_id, seg_id) in targets
                    else f"{system} translation of {doc_id} {seg_id}"
                )
                units.append(
                    TranslationUnit(system, SegmentRef(doc_id, seg_id), source, target)
                )
    return Project.create(
        language_pair="zh-en",
        documents=docs,
        systems=systems,
        units=units,
        mqm=mqm,
        rr=rr,
        designated_pairs=designated,
        annotators=annotators,
    )


def random_text(rng: random.Random, min_words=3, max_words=10) -> str:
    return nfc(" ".join(rng.choice(WORDS) for _ in range(rng.randint(min_words, max_words))))


def random_span(rng: random.Random, unit) -> ErrorSpan:
    roll = rng.random()
    if roll < 0.08:
        return ErrorSpan(
            Side.TARGET,
            0,
            0,
            ErrorCategory(Category.ACCURACY, Subcategory.OMISSION),
            Severity.MAJOR,
            unspecified_span=True,
        )
    if roll < 0.16 and len(unit.source) >= 2:
        start = rng.randrange(len(unit.source) - 1)
        end = rng.randrange(start + 1, len(unit.source) + 1)
        return ErrorSpan(
            Side.SOURCE,
            start,
            end,
            ErrorCategory(Category.SOURCE_ISSUE),
            rng.choice((Severity.MAJOR, Severity.MINOR)),
        )
    category = rng.choice(
        [c for c in Category if c not in (Category.SOURCE_ISSUE,)]
    )
    subs = SUBCATEGORIES[category]
    cat = ErrorCategory(category, rng.choice(subs) if subs else None)
    severity = (
        Severity.MAJOR
        if category == Category.NON_TRANSLATION
        else rng.choice((Severity.MAJOR, Severity.MINOR))
    )
    start = rng.randrange(max(1, len(unit.target) - 1))
    end = rng.randrange(start + 1, len(unit.target) + 1)
    return ErrorSpan(Side.TARGET, start, end, cat, severity)


def random_project(rng: random.Random) -> Project:
    n_docs = rng.randint(1, 3)
    systems = tuple(f"sys{c}" for c in "ABC"[: rng.randint(2, 3)])
    annotators = tuple(f"r{i}" for i in range(1, rng.randint(2, 4)))
    docs = []
    units = []
    for d in range(n_docs):
        doc_id = f"doc{d}"
        seg_ids = tuple(f"seg{s}" for s in range(rng.randint(1, 3)))
        docs.append((doc_id, seg_ids))
        for seg_id in seg_ids:
            source = random_text(rng)
            for system in systems:
                units.append(
                    TranslationUnit(
                        system, SegmentRef(doc_id, seg_id), source, random_text(rng)
                    )
                )
    designated = [(systems[0], systems[1])]

    mqm = []
    for u in units:
        for annotator in annotators:
            for setting in (Setting.MQM, Setting.SXS_MQM):
                if rng.random() < 0.25:
                    continue  # missing annotations are legal
                partner = None
                if setting == Setting.SXS_MQM:
                    if u.system not in designated[0]:
                        continue
                    partner = (
                        designated[0][1]
                        if u.system == designated[0][0]
                        else designated[0][0]
                    )
                errors = tuple(
                    sorted(
                        (random_span(rng, u) for _ in range(rng.randint(0, 3))),
                        key=ErrorSpan.sort_key,
                    )
                )
                mqm.append(
                    MqmAnnotation(
                        annotator=annotator,
                        setting=setting,
                        system=u.system,
                        segment=u.segment,
                        errors=errors,
                        pair_partner=partner,
                    )
                )
    rr = []
    for doc_id, seg_ids in docs:
        for seg_id in seg_ids:
            for annotator in annotators:
                if rng.random() < 0.3:
                    continue
                rr.append(
                    RrJudgment(
                        annotator=annotator,
                        segment=SegmentRef(doc_id, seg_id),
                        system_a=designated[0][0],
                        system_b=designated[0][1],
                        value=rng.choice(list(RrValue)),
                    )
                )
    return Project.create(
        language_pair=rng.choice(("zh-en", "en-de")),
        documents=docs,
        systems=systems,
        units=units,
        mqm=mqm,
        rr=rr,
        designated_pairs=designated,
        annotators=annotators,
    )


def build_synthetic_store(
    root: str,
    rng: random.Random,
    n_docs: int = 6,
    segs_per_doc: int = 3,
    n_annotators: int = 6,
) -> Project:
    """Drive the real campaign machinery to a fully annotated store.

    Six systems of decreasing quality translate shared segment content (so
    token alignments have equal regions); five designated pairs; every task
    is submitted with plausibility-weighted random results and exported.
    """
    from sxseval.campaign import Campaign, assign_tasks, save_assignment
    from sxseval.ingest import save_project

    systems = tuple(f"sys{c}" for c in "ABCDEF")
    quality = {s: i for i, s in enumerate(systems)}  # 0 best
    designated = (
        ("sysA", "sysB"),
        ("sysB", "sysC"),
        ("sysC", "sysD"),
        ("sysD", "sysE"),
        ("sysE", "sysF"),
    )
    vocab = WORDS
    docs = []
    units = []
    for d in range(n_docs):
        doc_id = f"doc{d:02d}"
        seg_ids = tuple(f"seg{s:02d}" for s in range(segs_per_doc))
        docs.append((doc_id, seg_ids))
        for seg_id in seg_ids:
            base = [rng.choice(vocab) for _ in range(rng.randint(6, 14))]
            source = nfc(" ".join(rng.choice(vocab) for _ in range(len(base))))
            for system in systems:
                words = list(base)
                for _ in range(quality[system] // 2):
                    words[rng.randrange(len(words))] = rng.choice(vocab)
                units.append(
                    TranslationUnit(
                        system,
                        SegmentRef(doc_id, seg_id),
                        source,
                        nfc(" ".join(words)),
                    )
                )
    pool = tuple(f"rater{i}" for i in range(1, n_annotators + 1))
    project = Project.create(
        language_pair="zh-en",
        documents=docs,
        systems=systems,
        units=units,
        designated_pairs=designated,
        annotators=pool,
    )
    save_project(project, root)
    assignment = assign_tasks(project, list(pool), seed=7)
    save_assignment(assignment, root)
    campaign = Campaign(project, assignment, root)

    def random_errors(target: str, system: str, annotator: str) -> list[dict]:
        leniency = 0.4 + 0.2 * (hash(annotator) % 3)
        lam = leniency * (1 + quality[system])
        count = min(4, int(rng.expovariate(1 / lam))) if lam > 0 else 0
        errors = []
        tokens = [m for m in target.split()]
        pos = 0
        spans = []
        for tok in tokens:
            start = target.index(tok, pos)
            spans.append((start, start + len(tok)))
            pos = start + len(tok)
        for _ in range(count):
            start, end = rng.choice(spans)
            category = rng.choice(
                [
                    "Accuracy/Mistranslation",
                    "Accuracy/Omission",
                    "Fluency/Grammar",
                    "Fluency/Punctuation",
                    "Style/Unnatural or Awkward",
                    "Terminology/Inconsistent",
                ]
            )
            severity = rng.choice(("major", "minor", "minor"))
            errors.append(
                {"category": category, "severity": severity, "start": start, "end": end}
            )
        return errors

    for annotator in pool:
        while True:
            task = campaign.next_task(annotator)
            if task is None:
                break
            if task.setting == Setting.MQM:
                target = campaign.project.unit_map[
                    (task.systems[0], task.segment)
                ].target
                result = {"errors": random_errors(target, task.systems[0], annotator)}
            elif task.setting == Setting.SXS_MQM:
                left, right = task.systems
                lt = campaign.project.unit_map[(left, task.segment)].target
                rt = campaign.project.unit_map[(right, task.segment)].target
                result = {
                    "left_errors": random_errors(lt, left, annotator),
                    "right_errors": random_errors(rt, right, annotator),
                }
            else:
                left, right = task.systems
                gap = quality[right] - quality[left]  # positive: left better
                roll = rng.gauss(gap, 1.2)
                if roll > 1.5:
                    pref = "left_much_better"
                elif roll > 0.4:
                    pref = "left_better"
                elif roll > -0.4:
                    pref = "same"
                elif roll > -1.5:
                    pref = "right_better"
                else:
                    pref = "right_much_better"
                result = {"preference": pref}
            campaign.submit(task.id, annotator, result, "sim")
    return campaign.export()


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240601)
