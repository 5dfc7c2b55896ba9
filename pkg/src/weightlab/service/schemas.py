"""Request/response bodies for the HTTP surface.

The run request/manifest models live in ``weightlab.config`` because the CLI
and runner share them; this module adds the wire-only shapes.
"""

from __future__ import annotations

from pydantic import BaseModel

from ..config import ExperimentConfig, RunManifest, RunRequest  # noqa: F401  (re-export)


class HealthResponse(BaseModel):
    status: str
    version: str
    schema_version: int


class ErrorBody(BaseModel):
    type: str
    message: str


class ErrorResponse(BaseModel):
    error: ErrorBody
