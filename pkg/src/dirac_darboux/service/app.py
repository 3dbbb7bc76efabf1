"""HTTP facade over the model builders, checkers and scattering solver.

The service is stateless: every request carries a full model config and
the response carries rendered artifacts as text, so persistence stays
with the caller.  Domain errors map to structured JSON bodies with the
same exit codes the CLI uses.
"""
from __future__ import annotations

from typing import Dict, List

from fastapi import FastAPI
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from ..checks import run_checks
from ..config import build_model, parse_config
from ..errors import (EXIT_INVALID_INPUT, DiracDarbouxError,
                      NumericalFailure)
from ..outputs import build_artifacts, render_scattering
from ..scattering import scatter_sweep

app = FastAPI(title="dirac-darboux", version="0.1.0")


class BuildRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: dict


class ScatterRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    config: dict
    energies: List[float] = Field(min_length=1)
    step: float = 1e-3


class BuildResponse(BaseModel):
    summary: dict
    files: Dict[str, str]


class VerifyResponse(BaseModel):
    report: dict


class ScatterResponse(BaseModel):
    files: Dict[str, str]
    results: List[dict]


@app.exception_handler(DiracDarbouxError)
async def _domain_error(request, exc: DiracDarbouxError):
    status = 500 if isinstance(exc, NumericalFailure) else 422
    return JSONResponse(status_code=status, content={
        "kind": type(exc).__name__,
        "message": str(exc),
        "exit_code": exc.exit_code,
    })


@app.exception_handler(RequestValidationError)
async def _request_error(request, exc: RequestValidationError):
    return JSONResponse(status_code=422, content={
        "kind": "InvalidInputError",
        "message": str(exc),
        "exit_code": EXIT_INVALID_INPUT,
    })


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


@app.post("/build", response_model=BuildResponse)
def build(req: BuildRequest) -> BuildResponse:
    model = build_model(parse_config(req.config))
    return BuildResponse(
        summary={
            "name": model.name,
            "kind": model.kind,
            "n_bound_states": len(model.bound_states),
            "bound_state_energies": [bs.energy for bs in model.bound_states],
        },
        files=build_artifacts(model))


@app.post("/verify", response_model=VerifyResponse)
def verify(req: BuildRequest) -> VerifyResponse:
    model = build_model(parse_config(req.config))
    report = run_checks(model)
    return VerifyResponse(report=report.to_dict())


@app.post("/scatter", response_model=ScatterResponse)
def scatter(req: ScatterRequest) -> ScatterResponse:
    model = build_model(parse_config(req.config))
    entries = scatter_sweep(model.potential, req.energies,
                            gamma=model.gamma, step=req.step)
    results = []
    for entry in entries:
        if "skip_reason" in entry:
            results.append({"energy": entry["energy"], "status": "skip",
                            "reason": entry["skip_reason"]})
        else:
            res = entry["result"]
            results.append({"energy": res.energy, "status": "ok",
                            "flux_defect": res.flux_defect,
                            "box_halfwidth": res.box_halfwidth})
    return ScatterResponse(
        files={"scattering.csv": render_scattering(entries)},
        results=results)
