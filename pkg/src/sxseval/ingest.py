"""WMT-style MQM TSV interchange format and the on-disk project store.

TSV framing: UTF-8, tab separators, ``\\n`` line endings, mandatory header,
no quoting; tabs or newlines inside a field are illegal. One error span per
row (``<v>``...``</v>`` markers); rows sharing (system, doc_id, seg_id,
rater) merge into one annotation. Unknown trailing columns are ignored so
files with extra diagnostics still load.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass

from .errors import WorkbenchError
from .model import (
    SPAN_CLOSE,
    SPAN_OPEN,
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
    nfc,
)

MQM_COLUMNS = (
    "system",
    "doc",
    "doc_id",
    "seg_id",
    "rater",
    "source",
    "target",
    "category",
    "severity",
)
SXS_COLUMNS = MQM_COLUMNS + ("pair_partner",)
RR_COLUMNS = ("doc_id", "seg_id", "system_a", "system_b", "rater", "value")

SCHEMA_VERSION = 1
PROJECT_FILE = "project.json"
UNITS_FILE = "units.tsv"
SETTING_FILES = {
    Setting.MQM: "mqm.tsv",
    Setting.SXS_MQM: "sxs_mqm.tsv",
    Setting.SXS_RR: "rr.tsv",
}
JOURNAL_FILE = os.path.join("log", "journal.jsonl")

_NO_ERROR = "no-error"


def extract_span(marked: str) -> tuple[str, tuple[int, int] | None]:
    """Strip the single ``<v>``...``</v>`` pair and return its clean offsets.

    Re-inserting the markers at the returned offsets reproduces the input
    exactly.
    """
    events = []
    i = 0
    while i < len(marked):
        if marked.startswith(SPAN_OPEN, i):
            events.append((i, "open"))
            i += len(SPAN_OPEN)
        elif marked.startswith(SPAN_CLOSE, i):
            events.append((i, "close"))
            i += len(SPAN_CLOSE)
        else:
            i += 1
    if not events:
        return marked, None
    kinds = [k for _, k in events]
    if kinds == ["open", "close"]:
        open_pos = events[0][0]
        close_pos = events[1][0]
        clean = (
            marked[:open_pos]
            + marked[open_pos + len(SPAN_OPEN) : close_pos]
            + marked[close_pos + len(SPAN_CLOSE) :]
        )
        return clean, (open_pos, close_pos - len(SPAN_OPEN))
    if kinds == ["open", "close"] * (len(kinds) // 2) and len(kinds) >= 4:
        raise WorkbenchError("E_MARKER_MULTIPLE", "more than one marked span")
    raise WorkbenchError("E_MARKER_UNBALANCED", "stray or nested span markers")


def insert_span(clean: str, span: tuple[int, int]) -> str:
    start, end = span
    return clean[:start] + SPAN_OPEN + clean[start:end] + SPAN_CLOSE + clean[end:]


def _check_field(value: str, column: str) -> str:
    if "\t" in value or "\n" in value or "\r" in value:
        raise WorkbenchError(
            "E_TAB_IN_FIELD", f"field {column!r} would corrupt TSV framing"
        )
    return value


def _split_rows(data: bytes, expected: tuple[str, ...]) -> list[list[str]]:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise WorkbenchError("E_BAD_HEADER", f"not UTF-8: {exc}")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise WorkbenchError("E_BAD_HEADER", "missing header row")
    header = lines[0].split("\t")
    if tuple(header[: len(expected)]) != expected:
        raise WorkbenchError(
            "E_BAD_HEADER",
            f"expected columns {list(expected)}, got {header[:len(expected)]}",
        )
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split("\t")
        if len(fields) < len(expected):
            raise WorkbenchError(
                "E_ROW_FIELDS",
                f"row {lineno}: {len(fields)} fields, need {len(expected)}",
                {"row": lineno},
            )
        rows.append(fields)
    return rows


def parse_mqm_tsv(
    data: bytes, setting: Setting
) -> tuple[list[MqmAnnotation], list[TranslationUnit]]:
    """Parse an error-annotation TSV into annotations plus their units."""
    if setting not in (Setting.MQM, Setting.SXS_MQM):
        raise WorkbenchError("E_SETTING", f"{setting.value} is not an MQM-style setting")
    columns = SXS_COLUMNS if setting == Setting.SXS_MQM else MQM_COLUMNS
    rows = _split_rows(data, columns)

    units: dict[tuple[str, SegmentRef], TranslationUnit] = {}
    grouped: dict[tuple, list[ErrorSpan]] = {}
    for lineno, fields in enumerate(rows, start=2):
        rec = dict(zip(columns, fields))
        segment = SegmentRef(rec["doc_id"], rec["seg_id"])
        # the partner joins the key so a system annotated in two pairs keeps
        # two distinct side-by-side annotations
        key = (rec["system"], segment, rec["rater"], rec.get("pair_partner"))
        try:
            src_clean, src_span = extract_span(nfc(rec["source"]))
            tgt_clean, tgt_span = extract_span(nfc(rec["target"]))
        except WorkbenchError as exc:
            raise WorkbenchError(exc.code, f"row {lineno}: {exc.message}", {"row": lineno})

        unit = TranslationUnit(rec["system"], segment, src_clean, tgt_clean)
        prior = units.setdefault((rec["system"], segment), unit)
        if prior != unit:
            raise WorkbenchError(
                "E_TEXT_MISMATCH",
                f"row {lineno}: clean text differs from an earlier row of the same unit",
                {"row": lineno},
            )

        grouped.setdefault(key, [])

        cat_raw = rec["category"].strip()
        sev_raw = rec["severity"].strip()
        if cat_raw.lower() == _NO_ERROR or sev_raw.lower() == _NO_ERROR:
            if cat_raw.lower() != _NO_ERROR:
                raise WorkbenchError(
                    "E_UNKNOWN_CATEGORY",
                    f"row {lineno}: severity says no-error but category is {cat_raw!r}",
                    {"row": lineno},
                )
            if sev_raw.lower() != _NO_ERROR:
                raise WorkbenchError(
                    "E_SEVERITY_PARSE",
                    f"row {lineno}: category says no-error but severity is {sev_raw!r}",
                    {"row": lineno},
                )
            if src_span or tgt_span:
                raise WorkbenchError(
                    "E_MARKER_UNBALANCED",
                    f"row {lineno}: no-error row carries a marked span",
                    {"row": lineno},
                )
            continue

        try:
            category = ErrorCategory.parse(cat_raw)
            severity = Severity.parse(sev_raw)
        except WorkbenchError as exc:
            raise WorkbenchError(exc.code, f"row {lineno}: {exc.message}", {"row": lineno})

        source_side = category.category.value == "Source Issue"
        if src_span and tgt_span:
            raise WorkbenchError(
                "E_MARKER_MULTIPLE",
                f"row {lineno}: spans marked on both source and target",
                {"row": lineno},
            )
        if (src_span and not source_side) or (tgt_span and source_side):
            raise WorkbenchError(
                "E_SPAN_SIDE",
                f"row {lineno}: span marked on the wrong side for {category.path()}",
                {"row": lineno},
            )
        span = src_span if source_side else tgt_span
        side = Side.SOURCE if source_side else Side.TARGET
        if span is None:
            grouped[key].append(
                ErrorSpan(side, 0, 0, category, severity, unspecified_span=True)
            )
        else:
            grouped[key].append(ErrorSpan(side, span[0], span[1], category, severity))

    annotations = []
    for key in grouped:
        system, segment, rater, partner = key
        errors = tuple(sorted(grouped[key], key=ErrorSpan.sort_key))
        annotations.append(
            MqmAnnotation(
                annotator=rater,
                setting=setting,
                system=system,
                segment=segment,
                errors=errors,
                pair_partner=partner,
            )
        )
    annotations.sort(
        key=lambda a: (a.segment, a.system, a.pair_partner or "", a.annotator)
    )
    return annotations, sorted(units.values(), key=lambda u: (u.segment, u.system))


def write_mqm_tsv(
    annotations: list[MqmAnnotation] | tuple[MqmAnnotation, ...],
    units: dict[tuple[str, SegmentRef], TranslationUnit],
    setting: Setting,
) -> bytes:
    """Serialize annotations; rows canonically ordered, one span per row."""
    columns = SXS_COLUMNS if setting == Setting.SXS_MQM else MQM_COLUMNS
    out_rows: list[tuple] = []
    for a in annotations:
        if a.setting != setting:
            continue
        unit = units[(a.system, a.segment)]
        base = {
            "system": a.system,
            "doc": a.segment.doc_id,
            "doc_id": a.segment.doc_id,
            "seg_id": a.segment.seg_id,
            "rater": a.annotator,
            "source": unit.source,
            "target": unit.target,
            "pair_partner": a.pair_partner or "",
        }
        if not a.errors:
            row = dict(base, category="No-error", severity="No-error")
            out_rows.append((a.segment, a.system, a.annotator, -1, row))
            continue
        for span in a.errors:
            row = dict(base)
            if not span.unspecified_span:
                marked = insert_span(
                    unit.source if span.side == Side.SOURCE else unit.target,
                    (span.start, span.end),
                )
                row["source" if span.side == Side.SOURCE else "target"] = marked
            row["category"] = span.category.path()
            row["severity"] = span.severity.value.capitalize()
            out_rows.append((a.segment, a.system, a.annotator, span.start, row))

    out_rows.sort(key=lambda r: (r[0], r[1], r[2], r[3]))
    lines = ["\t".join(columns)]
    for *_, row in out_rows:
        lines.append("\t".join(_check_field(row[c], c) for c in columns))
    return ("\n".join(lines) + "\n").encode("utf-8")


def parse_rr_tsv(data: bytes) -> list[RrJudgment]:
    rows = _split_rows(data, RR_COLUMNS)
    judgments = []
    for lineno, fields in enumerate(rows, start=2):
        rec = dict(zip(RR_COLUMNS, fields))
        if rec["system_a"] == rec["system_b"]:
            raise WorkbenchError(
                "E_SELF_PAIR", f"row {lineno}: system_a == system_b", {"row": lineno}
            )
        try:
            value = RrValue.parse(rec["value"])
        except WorkbenchError as exc:
            raise WorkbenchError(exc.code, f"row {lineno}: {exc.message}", {"row": lineno})
        judgments.append(
            RrJudgment(
                annotator=rec["rater"],
                segment=SegmentRef(rec["doc_id"], rec["seg_id"]),
                system_a=rec["system_a"],
                system_b=rec["system_b"],
                value=value,
            )
        )
    judgments.sort(key=lambda j: (j.segment, j.system_a, j.system_b, j.annotator))
    return judgments


def write_rr_tsv(judgments) -> bytes:
    lines = ["\t".join(RR_COLUMNS)]
    ordered = sorted(
        judgments, key=lambda j: (j.segment, j.system_a, j.system_b, j.annotator)
    )
    for j in ordered:
        fields = (
            j.segment.doc_id,
            j.segment.seg_id,
            j.system_a,
            j.system_b,
            j.annotator,
            j.value.value,
        )
        lines.append("\t".join(_check_field(f, c) for f, c in zip(fields, RR_COLUMNS)))
    return ("\n".join(lines) + "\n").encode("utf-8")


def _write_units_tsv(project: Project) -> bytes:
    lines = ["\t".join(("system", "doc_id", "seg_id", "source", "target"))]
    for doc_id, seg_ids in project.documents:
        for seg_id in seg_ids:
            ref = SegmentRef(doc_id, seg_id)
            for system in sorted(project.systems):
                unit = project.unit_map.get((system, ref))
                if unit is None:
                    continue
                fields = (system, doc_id, seg_id, unit.source, unit.target)
                lines.append("\t".join(_check_field(f, "units") for f in fields))
    return ("\n".join(lines) + "\n").encode("utf-8")


def _parse_units_tsv(data: bytes):
    rows = _split_rows(data, ("system", "doc_id", "seg_id", "source", "target"))
    units = []
    documents: dict[str, list[str]] = {}
    for fields in rows:
        system, doc_id, seg_id, source, target = fields[:5]
        segs = documents.setdefault(doc_id, [])
        if seg_id not in segs:
            segs.append(seg_id)
        units.append(
            TranslationUnit(system, SegmentRef(doc_id, seg_id), nfc(source), nfc(target))
        )
    return units, [(d, tuple(s)) for d, s in documents.items()]


@dataclass(frozen=True)
class JournalEntry:
    """One acknowledged submission; checksummed, strictly sequence-ordered."""

    seq: int
    task_id: str
    annotator: str
    revision: int
    result: dict
    client_ts: str

    def payload(self) -> dict:
        return {
            "seq": self.seq,
            "task_id": self.task_id,
            "annotator": self.annotator,
            "revision": self.revision,
            "result": self.result,
            "client_ts": self.client_ts,
        }

    def line(self) -> str:
        body = json.dumps(self.payload(), sort_keys=True, ensure_ascii=False)
        digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
        return json.dumps(
            {"entry": self.payload(), "sha256": digest},
            sort_keys=True,
            ensure_ascii=False,
        )


def read_journal(root: str) -> list[JournalEntry]:
    """Replay the append-only journal, verifying checksums and sequence."""
    path = os.path.join(root, JOURNAL_FILE)
    if not os.path.exists(path):
        return []
    entries: list[JournalEntry] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                wrapper = json.loads(line)
                body = wrapper["entry"]
                digest = wrapper["sha256"]
            except (json.JSONDecodeError, KeyError, TypeError):
                raise WorkbenchError(
                    "E_STORE_CORRUPT", f"journal line {lineno} unreadable"
                )
            canonical = json.dumps(body, sort_keys=True, ensure_ascii=False)
            if hashlib.sha256(canonical.encode("utf-8")).hexdigest() != digest:
                raise WorkbenchError(
                    "E_STORE_CORRUPT", f"journal line {lineno} checksum mismatch"
                )
            if body["seq"] != len(entries) + 1:
                raise WorkbenchError(
                    "E_STORE_CORRUPT",
                    f"journal sequence gap at line {lineno}:"
                    f" got {body['seq']}, expected {len(entries) + 1}",
                )
            entries.append(
                JournalEntry(
                    seq=body["seq"],
                    task_id=body["task_id"],
                    annotator=body["annotator"],
                    revision=body["revision"],
                    result=body["result"],
                    client_ts=body["client_ts"],
                )
            )
    return entries


def append_journal(root: str, entry: JournalEntry) -> None:
    path = os.path.join(root, JOURNAL_FILE)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(entry.line() + "\n")
        fh.flush()
        os.fsync(fh.fileno())


def save_project(project: Project, root: str) -> None:
    os.makedirs(root, exist_ok=True)
    meta = {
        "schema_version": SCHEMA_VERSION,
        "language_pair": project.language_pair,
        "systems": sorted(project.systems),
        "designated_pairs": [list(p) for p in project.designated_pairs],
        "annotators": sorted(project.annotators),
    }
    with open(os.path.join(root, PROJECT_FILE), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")
    with open(os.path.join(root, UNITS_FILE), "wb") as fh:
        fh.write(_write_units_tsv(project))
    unit_map = project.unit_map
    for setting in (Setting.MQM, Setting.SXS_MQM):
        with open(os.path.join(root, SETTING_FILES[setting]), "wb") as fh:
            fh.write(write_mqm_tsv(project.mqm, unit_map, setting))
    with open(os.path.join(root, SETTING_FILES[Setting.SXS_RR]), "wb") as fh:
        fh.write(write_rr_tsv(project.rr))


def load_project(root: str) -> Project:
    meta_path = os.path.join(root, PROJECT_FILE)
    if not os.path.exists(meta_path):
        raise WorkbenchError("E_STORE_CORRUPT", f"missing {PROJECT_FILE} in {root}")
    with open(meta_path, encoding="utf-8") as fh:
        try:
            meta = json.load(fh)
        except json.JSONDecodeError as exc:
            raise WorkbenchError("E_STORE_CORRUPT", f"bad {PROJECT_FILE}: {exc}")
    if meta.get("schema_version") != SCHEMA_VERSION:
        raise WorkbenchError(
            "E_VERSION", f"unknown schema_version {meta.get('schema_version')!r}"
        )

    def read(name: str) -> bytes:
        path = os.path.join(root, name)
        if not os.path.exists(path):
            raise WorkbenchError("E_STORE_CORRUPT", f"missing {name} in {root}")
        with open(path, "rb") as fh:
            return fh.read()

    units, documents = _parse_units_tsv(read(UNITS_FILE))
    mqm, _ = parse_mqm_tsv(read(SETTING_FILES[Setting.MQM]), Setting.MQM)
    sxs, _ = parse_mqm_tsv(read(SETTING_FILES[Setting.SXS_MQM]), Setting.SXS_MQM)
    rr = parse_rr_tsv(read(SETTING_FILES[Setting.SXS_RR]))
    read_journal(root)  # integrity check only; campaign state replays it
    return Project.create(
        language_pair=meta["language_pair"],
        documents=documents,
        systems=meta["systems"],
        units=units,
        mqm=list(mqm) + list(sxs),
        rr=rr,
        designated_pairs=[tuple(p) for p in meta["designated_pairs"]],
        annotators=meta["annotators"],
    )
