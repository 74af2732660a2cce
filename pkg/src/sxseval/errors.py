"""Coded exceptions shared across the workbench."""

from __future__ import annotations

from typing import Any


class WorkbenchError(Exception):
    """Failure with a stable machine-readable code.

    ``detail`` carries structured context (row numbers, offending ids) so the
    CLI and the HTTP service can surface it without string parsing.
    """

    def __init__(self, code: str, message: str, detail: dict[str, Any] | None = None):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message
        self.detail = detail or {}
