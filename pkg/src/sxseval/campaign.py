"""Task assignment under the within-subject design and the live campaign
state consumed by the annotation service.

Every document goes to the same k annotators across all systems and all
three settings. Submissions are journaled append-only before they are
acknowledged, so replaying the journal after a crash reconstructs exactly
the acknowledged state.
"""

from __future__ import annotations

import json
import os
import random
import threading
from dataclasses import dataclass

from .errors import WorkbenchError
from .ingest import (
    JournalEntry,
    append_journal,
    read_journal,
    save_project,
)
from .model import (
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
    TranslationUnit,
    check_span,
    nfc,
)

ASSIGNMENTS_FILE = "assignments.json"

DEFAULT_SETTING_ORDER = (Setting.MQM, Setting.SXS_MQM, Setting.SXS_RR)

# five-point preference control, in display (left/right) terms
PREFERENCES = (
    "left_much_better",
    "left_better",
    "same",
    "right_better",
    "right_much_better",
)
_PREF_TO_VALUE = {
    ("left_much_better", True): RrValue.A_MUCH_BETTER,
    ("left_better", True): RrValue.A_BETTER,
    ("same", True): RrValue.SAME,
    ("right_better", True): RrValue.B_BETTER,
    ("right_much_better", True): RrValue.B_MUCH_BETTER,
    ("left_much_better", False): RrValue.B_MUCH_BETTER,
    ("left_better", False): RrValue.B_BETTER,
    ("same", False): RrValue.SAME,
    ("right_better", False): RrValue.A_BETTER,
    ("right_much_better", False): RrValue.A_MUCH_BETTER,
}


@dataclass(frozen=True)
class Task:
    id: str
    annotator: str
    setting: Setting
    segment: SegmentRef
    systems: tuple[str, ...]  # display order; one entry for single-sided tasks
    pair: tuple[str, str] | None  # canonical designated-pair orientation


@dataclass(frozen=True)
class Assignment:
    doc_triples: dict[str, tuple[str, ...]]
    tasks: tuple[Task, ...]
    pool: tuple[str, ...]
    k: int
    seed: int
    setting_order: tuple[Setting, ...]


def _side_order(seed: int, seg: SegmentRef, pair: tuple[str, str]) -> tuple[str, str]:
    # stable per segment and pair so re-building the task list after a
    # restart reproduces the journaled display sides
    rng = random.Random(f"{seed}:{seg.doc_id}:{seg.seg_id}:{pair[0]}:{pair[1]}")
    return pair if rng.getrandbits(1) == 0 else (pair[1], pair[0])


def build_tasks(
    project: Project,
    doc_triples: dict[str, tuple[str, ...]],
    seed: int,
    setting_order=DEFAULT_SETTING_ORDER,
) -> tuple[Task, ...]:
    tasks: list[Task] = []
    counter = 0

    def add(annotator, setting, seg, systems, pair):
        nonlocal counter
        counter += 1
        tasks.append(
            Task(f"task-{counter:06d}", annotator, setting, seg, systems, pair)
        )

    pool = sorted({a for triple in doc_triples.values() for a in triple})
    for annotator in pool:
        docs = [
            (doc_id, seg_ids)
            for doc_id, seg_ids in project.documents
            if annotator in doc_triples.get(doc_id, ())
        ]
        for setting in setting_order:
            for doc_id, seg_ids in docs:
                if setting == Setting.MQM:
                    for system in sorted(project.systems):
                        for seg_id in seg_ids:
                            seg = SegmentRef(doc_id, seg_id)
                            if (system, seg) not in project.unit_map:
                                continue
                            add(annotator, setting, seg, (system,), None)
                else:
                    for pair in project.designated_pairs:
                        for seg_id in seg_ids:
                            seg = SegmentRef(doc_id, seg_id)
                            if any((s, seg) not in project.unit_map for s in pair):
                                continue
                            sides = _side_order(seed, seg, pair)
                            add(annotator, setting, seg, sides, pair)
    return tuple(tasks)


def assign_tasks(
    project: Project,
    annotator_pool,
    k: int = 3,
    seed: int = 0,
    setting_order=DEFAULT_SETTING_ORDER,
) -> Assignment:
    """Greedy lowest-load document assignment: each document goes to the k
    annotators with the fewest assigned segments so far, ties broken by a
    seeded shuffle of the pool."""
    pool = list(dict.fromkeys(annotator_pool))
    if len(pool) < k:
        raise WorkbenchError(
            "E_POOL_TOO_SMALL", f"pool of {len(pool)} cannot supply {k} annotators"
        )
    shuffled = list(pool)
    random.Random(seed).shuffle(shuffled)
    tie_rank = {a: i for i, a in enumerate(shuffled)}
    load = {a: 0 for a in pool}
    doc_triples: dict[str, tuple[str, ...]] = {}
    for doc_id, seg_ids in project.documents:
        chosen = sorted(pool, key=lambda a: (load[a], tie_rank[a]))[:k]
        doc_triples[doc_id] = tuple(sorted(chosen))
        for a in chosen:
            load[a] += len(seg_ids)
    tasks = build_tasks(project, doc_triples, seed, tuple(setting_order))
    return Assignment(
        doc_triples=doc_triples,
        tasks=tasks,
        pool=tuple(pool),
        k=k,
        seed=seed,
        setting_order=tuple(setting_order),
    )


def save_assignment(assignment: Assignment, root: str) -> None:
    os.makedirs(root, exist_ok=True)
    data = {
        "pool": list(assignment.pool),
        "k": assignment.k,
        "seed": assignment.seed,
        "setting_order": [s.value for s in assignment.setting_order],
        "doc_triples": {d: list(t) for d, t in assignment.doc_triples.items()},
    }
    with open(os.path.join(root, ASSIGNMENTS_FILE), "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_assignment(project: Project, root: str) -> Assignment:
    path = os.path.join(root, ASSIGNMENTS_FILE)
    if not os.path.exists(path):
        raise WorkbenchError("E_STORE_CORRUPT", f"missing {ASSIGNMENTS_FILE} in {root}")
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    doc_triples = {d: tuple(t) for d, t in data["doc_triples"].items()}
    setting_order = tuple(Setting(s) for s in data["setting_order"])
    tasks = build_tasks(project, doc_triples, data["seed"], setting_order)
    return Assignment(
        doc_triples=doc_triples,
        tasks=tasks,
        pool=tuple(data["pool"]),
        k=data["k"],
        seed=data["seed"],
        setting_order=setting_order,
    )


def check_assignment(project: Project, assignment: Assignment) -> list[str]:
    """Standalone validator for the within-subject invariants."""
    problems = []
    for doc_id, triple in assignment.doc_triples.items():
        if len(set(triple)) != assignment.k:
            problems.append(f"{doc_id}: expected {assignment.k} distinct annotators")
    per_item: dict[tuple, set[str]] = {}
    for task in assignment.tasks:
        key = (task.setting, task.segment, tuple(sorted(task.systems)))
        per_item.setdefault(key, set()).add(task.annotator)
        triple = assignment.doc_triples.get(task.segment.doc_id, ())
        if task.annotator not in triple:
            problems.append(f"{task.id}: annotator outside the document triple")
    for key, annotators in per_item.items():
        setting, seg, _ = key
        if annotators != set(assignment.doc_triples.get(seg.doc_id, ())):
            problems.append(
                f"{setting.value} {seg.doc_id}/{seg.seg_id}: annotator set differs"
                " from the document triple"
            )
    return problems


def _parse_submitted_errors(
    raw_errors, unit: TranslationUnit, where: str
) -> tuple[ErrorSpan, ...]:
    spans = []
    violations = []
    for i, err in enumerate(raw_errors):
        try:
            category = ErrorCategory.parse(str(err.get("category", "")))
            severity = Severity.parse(str(err.get("severity", "")))
        except WorkbenchError as exc:
            raise WorkbenchError(
                "E_VALIDATION", f"{where} error {i}: {exc.message}", exc.detail
            )
        side = (
            Side.SOURCE
            if category.category.value == "Source Issue"
            else Side.TARGET
        )
        span = ErrorSpan(
            side=side,
            start=int(err.get("start", 0)),
            end=int(err.get("end", 0)),
            category=category,
            severity=severity,
            unspecified_span=bool(err.get("unspecified_span", False)),
        )
        check_span(span, unit, f"{where} error {i}", violations)
        spans.append(span)
    if violations:
        raise WorkbenchError(
            "E_VALIDATION",
            "submitted errors violate span invariants",
            {"violations": [f"{v.code} at {v.where}" for v in violations]},
        )
    return tuple(sorted(spans, key=ErrorSpan.sort_key))


class Campaign:
    """Live campaign state: tasks, journal, and export."""

    def __init__(self, project: Project, assignment: Assignment, root: str):
        self.project = project
        self.assignment = assignment
        self.root = root
        self._lock = threading.Lock()
        self._tasks = {t.id: t for t in assignment.tasks}
        self._queues: dict[str, list[str]] = {}
        for task in assignment.tasks:
            self._queues.setdefault(task.annotator, []).append(task.id)
        self._latest: dict[str, JournalEntry] = {}
        self._seq = 0
        for entry in read_journal(root):
            if entry.task_id not in self._tasks:
                raise WorkbenchError(
                    "E_STORE_CORRUPT", f"journal references unknown {entry.task_id}"
                )
            self._latest[entry.task_id] = entry
            self._seq = entry.seq

    def next_task(self, annotator: str) -> Task | None:
        if annotator not in self.assignment.pool:
            raise WorkbenchError("E_UNKNOWN_ANNOTATOR", f"unknown annotator {annotator!r}")
        for task_id in self._queues.get(annotator, []):
            if task_id not in self._latest:
                return self._tasks[task_id]
        return None

    def task_payload(self, task: Task) -> dict:
        """What the blind UI sees: texts and display sides, no system ids."""
        unit0 = self.project.unit_map[(task.systems[0], task.segment)]
        payload = {
            "task_id": task.id,
            "annotator": task.annotator,
            "setting": task.setting.value,
            "doc_id": task.segment.doc_id,
            "seg_id": task.segment.seg_id,
            "source": unit0.source,
            "targets": [
                self.project.unit_map[(s, task.segment)].target for s in task.systems
            ],
        }
        if task.setting == Setting.SXS_RR:
            payload["options"] = list(PREFERENCES)
        return payload

    def _validate_result(self, task: Task, result: dict) -> dict:
        where = task.id
        if task.setting == Setting.MQM:
            if "errors" not in result or not isinstance(result["errors"], list):
                raise WorkbenchError("E_VALIDATION", f"{where}: expected an error list")
            unit = self.project.unit_map[(task.systems[0], task.segment)]
            spans = _parse_submitted_errors(result["errors"], unit, where)
            return {"errors": [_span_dict(s) for s in spans]}
        if task.setting == Setting.SXS_MQM:
            for key in ("left_errors", "right_errors"):
                if key not in result or not isinstance(result[key], list):
                    raise WorkbenchError(
                        "E_VALIDATION", f"{where}: expected {key} list"
                    )
            left_unit = self.project.unit_map[(task.systems[0], task.segment)]
            right_unit = self.project.unit_map[(task.systems[1], task.segment)]
            left = _parse_submitted_errors(result["left_errors"], left_unit, where)
            right = _parse_submitted_errors(result["right_errors"], right_unit, where)
            return {
                "left_errors": [_span_dict(s) for s in left],
                "right_errors": [_span_dict(s) for s in right],
            }
        preference = result.get("preference")
        if preference not in PREFERENCES:
            raise WorkbenchError(
                "E_VALIDATION",
                f"{where}: preference must be one of {list(PREFERENCES)}",
            )
        return {"preference": preference}

    def submit(self, task_id: str, annotator: str, result: dict, client_ts: str) -> dict:
        task = self._tasks.get(task_id)
        if task is None:
            raise WorkbenchError("E_UNKNOWN_TASK", f"no task {task_id!r}")
        if task.annotator != annotator:
            raise WorkbenchError(
                "E_WRONG_ANNOTATOR", f"{task_id} belongs to {task.annotator}"
            )
        canonical = self._validate_result(task, result)
        with self._lock:
            prior = self._latest.get(task_id)
            entry = JournalEntry(
                seq=self._seq + 1,
                task_id=task_id,
                annotator=annotator,
                revision=0 if prior is None else prior.revision + 1,
                result=canonical,
                client_ts=str(client_ts),
            )
            append_journal(self.root, entry)
            self._seq = entry.seq
            self._latest[task_id] = entry
        return {
            "task_id": task_id,
            "seq": entry.seq,
            "revision": entry.revision,
            "is_revision": entry.revision > 0,
        }

    def progress(self) -> dict:
        per_annotator = {}
        for annotator in self.assignment.pool:
            queue = self._queues.get(annotator, [])
            done = sum(1 for t in queue if t in self._latest)
            per_annotator[annotator] = {"done": done, "total": len(queue)}
        per_setting = {s.value: {"done": 0, "total": 0} for s in self.assignment.setting_order}
        for task in self.assignment.tasks:
            bucket = per_setting[task.setting.value]
            bucket["total"] += 1
            if task.id in self._latest:
                bucket["done"] += 1
        total = len(self.assignment.tasks)
        done = len(self._latest)
        return {
            "annotators": per_annotator,
            "settings": per_setting,
            "total": {"done": done, "total": total},
        }

    def collected_project(self) -> Project:
        """The project with the journal's latest revisions folded in; a
        journaled item replaces any preloaded annotation with the same key."""
        mqm: dict[tuple, MqmAnnotation] = {}
        for a in self.project.mqm:
            mqm[(a.setting, a.system, a.segment, a.annotator, a.pair_partner)] = a
        rr: dict[tuple, RrJudgment] = {}
        for j in self.project.rr:
            rr[(frozenset((j.system_a, j.system_b)), j.segment, j.annotator)] = j

        for task_id in sorted(self._latest):
            entry = self._latest[task_id]
            task = self._tasks[task_id]
            if task.setting == Setting.MQM:
                a = MqmAnnotation(
                    annotator=task.annotator,
                    setting=Setting.MQM,
                    system=task.systems[0],
                    segment=task.segment,
                    errors=_spans_from(entry.result["errors"]),
                )
                mqm[(a.setting, a.system, a.segment, a.annotator, None)] = a
            elif task.setting == Setting.SXS_MQM:
                left, right = task.systems
                for system, partner, key in (
                    (left, right, "left_errors"),
                    (right, left, "right_errors"),
                ):
                    a = MqmAnnotation(
                        annotator=task.annotator,
                        setting=Setting.SXS_MQM,
                        system=system,
                        segment=task.segment,
                        errors=_spans_from(entry.result[key]),
                        pair_partner=partner,
                    )
                    mqm[(a.setting, a.system, a.segment, a.annotator, partner)] = a
            else:
                sys_a, sys_b = task.pair
                left_is_a = task.systems[0] == sys_a
                value = _PREF_TO_VALUE[(entry.result["preference"], left_is_a)]
                j = RrJudgment(
                    annotator=task.annotator,
                    segment=task.segment,
                    system_a=sys_a,
                    system_b=sys_b,
                    value=value,
                )
                rr[(frozenset((sys_a, sys_b)), j.segment, j.annotator)] = j

        return Project.create(
            language_pair=self.project.language_pair,
            documents=self.project.documents,
            systems=self.project.systems,
            units=self.project.units,
            mqm=list(mqm.values()),
            rr=list(rr.values()),
            designated_pairs=self.project.designated_pairs,
            annotators=set(self.project.annotators) | set(self.assignment.pool),
        )

    def export(self) -> Project:
        """Fold the journal and rewrite the canonical store files."""
        folded = self.collected_project()
        try:
            save_project(folded, self.root)
        except WorkbenchError:
            raise
        except OSError as exc:
            raise WorkbenchError("E_STORE_WRITE", f"cannot write store: {exc}")
        return folded


def _span_dict(span: ErrorSpan) -> dict:
    return {
        "side": span.side.value,
        "start": span.start,
        "end": span.end,
        "category": span.category.path(),
        "severity": span.severity.value,
        "unspecified_span": span.unspecified_span,
    }


def _spans_from(raw: list[dict]) -> tuple[ErrorSpan, ...]:
    spans = [
        ErrorSpan(
            side=Side(err["side"]),
            start=err["start"],
            end=err["end"],
            category=ErrorCategory.parse(err["category"]),
            severity=Severity(err["severity"]),
            unspecified_span=err["unspecified_span"],
        )
        for err in raw
    ]
    return tuple(sorted(spans, key=ErrorSpan.sort_key))
