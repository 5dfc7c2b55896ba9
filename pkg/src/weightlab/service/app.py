"""FastAPI wrapper around the runner.

Bad requests — config validation failures, missing input files — come back as
422 with a typed error body; anything that blows up mid-run is a 500. The CLI
mounts this app in-process by default, so the service and the CLI cannot
drift apart.
"""

from __future__ import annotations

import logging

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import SCHEMA_VERSION, __version__
from ..errors import SpecificationError
from ..runner import run
from .schemas import ErrorBody, ErrorResponse, HealthResponse, RunManifest, RunRequest

log = logging.getLogger("weightlab.service")

RUN_KINDS = ("gen", "train", "difficulty", "bound", "check", "report")


def _error_response(status: int, exc: Exception) -> JSONResponse:
    body = ErrorResponse(error=ErrorBody(type=type(exc).__name__, message=str(exc)))
    return JSONResponse(status_code=status, content=body.model_dump())


def create_app() -> FastAPI:
    app = FastAPI(title="weightlab", version=__version__)

    @app.exception_handler(SpecificationError)
    async def _spec_error(request: Request, exc: SpecificationError):
        return _error_response(422, exc)

    @app.exception_handler(FileNotFoundError)
    async def _missing_input(request: Request, exc: FileNotFoundError):
        return _error_response(422, exc)

    @app.exception_handler(Exception)
    async def _run_failure(request: Request, exc: Exception):
        log.exception("run failed: %s", exc)
        return _error_response(500, exc)

    @app.get("/v1/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__, schema_version=SCHEMA_VERSION)

    @app.post(
        "/v1/run/{kind}",
        response_model=RunManifest,
        responses={422: {"model": ErrorResponse}, 500: {"model": ErrorResponse}},
    )
    def run_experiment(kind: str, request: RunRequest) -> RunManifest:
        if kind not in RUN_KINDS:
            raise SpecificationError(f"unknown experiment kind: {kind!r}")
        if request.config.experiment != kind:
            raise SpecificationError(
                f"config is a {request.config.experiment!r} experiment, posted to /v1/run/{kind}"
            )
        log.info("run %s -> %s", kind, request.out_dir)
        return run(request.config, request.out_dir, jobs=request.jobs)

    return app
