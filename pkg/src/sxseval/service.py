"""HTTP/JSON annotation service: the campaign API the browser UI talks to.

All bodies are UTF-8 JSON; failures come back as {code, message, detail}
with a status mapped from the error code. The UI stays blind: payloads
carry texts and display sides only, never system identities.
"""

from __future__ import annotations

import os

from fastapi import FastAPI, Query
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .campaign import Campaign, PREFERENCES
from .errors import WorkbenchError
from .model import SegmentRef, Setting

_STATUS = {
    "E_UNKNOWN_TASK": 404,
    "E_UNKNOWN_ANNOTATOR": 404,
    "E_WRONG_ANNOTATOR": 403,
}


class ErrorSpanIn(BaseModel):
    category: str
    severity: str
    start: int = 0
    end: int = 0
    unspecified_span: bool = False


class SubmissionIn(BaseModel):
    task_id: str
    annotator: str
    client_ts: str = ""
    errors: list[ErrorSpanIn] | None = None
    left_errors: list[ErrorSpanIn] | None = None
    right_errors: list[ErrorSpanIn] | None = None
    preference: str | None = Field(default=None, description=f"one of {PREFERENCES}")


class AckOut(BaseModel):
    task_id: str
    seq: int
    revision: int
    is_revision: bool


class TaskOut(BaseModel):
    done: bool
    task_id: str | None = None
    annotator: str | None = None
    setting: str | None = None
    doc_id: str | None = None
    seg_id: str | None = None
    source: str | None = None
    targets: list[str] | None = None
    options: list[str] | None = None


class ContextSegment(BaseModel):
    seg_id: str
    source: str
    targets: list[str] | None = None
    active: bool = False


class ContextOut(BaseModel):
    doc_id: str
    segments: list[ContextSegment]


class ExportOut(BaseModel):
    written: bool
    mqm: int
    sxs_mqm: int
    rr: int


def create_app(campaign: Campaign, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="sxseval campaign service")

    @app.exception_handler(WorkbenchError)
    async def _workbench_error(_, exc: WorkbenchError):
        return JSONResponse(
            status_code=_STATUS.get(exc.code, 400),
            content={"code": exc.code, "message": exc.message, "detail": exc.detail},
        )

    @app.get("/api/tasks/next", response_model=TaskOut, response_model_exclude_none=True)
    def next_task(annotator: str = Query(...)):
        task = campaign.next_task(annotator)
        if task is None:
            return TaskOut(done=True)
        return TaskOut(done=False, **campaign.task_payload(task))

    @app.post("/api/submissions", response_model=AckOut)
    def submit(submission: SubmissionIn):
        result: dict = {}
        if submission.errors is not None:
            result["errors"] = [e.model_dump() for e in submission.errors]
        if submission.left_errors is not None:
            result["left_errors"] = [e.model_dump() for e in submission.left_errors]
        if submission.right_errors is not None:
            result["right_errors"] = [e.model_dump() for e in submission.right_errors]
        if submission.preference is not None:
            result["preference"] = submission.preference
        ack = campaign.submit(
            submission.task_id, submission.annotator, result, submission.client_ts
        )
        return AckOut(**ack)

    @app.get("/api/progress")
    def progress():
        return campaign.progress()

    @app.post("/api/export", response_model=ExportOut)
    def export():
        folded = campaign.export()
        return ExportOut(
            written=True,
            mqm=len(folded.mqm_for(Setting.MQM)),
            sxs_mqm=len(folded.mqm_for(Setting.SXS_MQM)),
            rr=len(folded.rr),
        )

    @app.get("/api/context/{doc_id}", response_model=ContextOut, response_model_exclude_none=True)
    def context(doc_id: str, task: str | None = None):
        project = campaign.project
        doc = dict(project.documents).get(doc_id)
        if doc is None:
            raise WorkbenchError("E_UNKNOWN_TASK", f"no document {doc_id!r}")
        systems: tuple[str, ...] = ()
        active_seg = None
        if task is not None:
            task_obj = campaign._tasks.get(task)
            if task_obj is None:
                raise WorkbenchError("E_UNKNOWN_TASK", f"no task {task!r}")
            if task_obj.segment.doc_id == doc_id:
                systems = task_obj.systems
                active_seg = task_obj.segment.seg_id
        segments = []
        for seg_id in doc:
            ref = SegmentRef(doc_id, seg_id)
            unit = next(
                (
                    project.unit_map[(s, ref)]
                    for s in sorted(project.systems)
                    if (s, ref) in project.unit_map
                ),
                None,
            )
            targets = None
            if systems:
                targets = [
                    project.unit_map[(s, ref)].target
                    for s in systems
                    if (s, ref) in project.unit_map
                ]
            segments.append(
                ContextSegment(
                    seg_id=seg_id,
                    source=unit.source if unit else "",
                    targets=targets,
                    active=seg_id == active_seg,
                )
            )
        return ContextOut(doc_id=doc_id, segments=segments)

    if static_dir and os.path.isdir(static_dir):
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    return app
