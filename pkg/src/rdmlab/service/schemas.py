"""Request and response models for the service API.

Bundles travel as their canonical JSON documents (validated server-side
by the bundle loader, which gives better error messages than schema
validation could); matrices use the same nested [re, im] encoding as the
bundle format.
"""

from typing import Literal, Optional

from pydantic import BaseModel, Field


class SolveOptions(BaseModel):
    tol_gap: float = 1e-6
    tol_feas: float = 1e-6
    seed: int = 0


class ResultRow(BaseModel):
    input_hash: str
    quantity: str
    param: Optional[float] = None
    value: Optional[float] = None
    gap: float = 0.0
    feasibility: float = 0.0
    iterations: int = 0
    wall_time_ms: float = 0.0
    status: str = "ok"
    detail: str = ""


class RowsResponse(BaseModel):
    rows: list[ResultRow]


class CheckRow(BaseModel):
    name: str
    defect: float
    threshold: float
    passed: bool
    detail: str = ""


class ChecksResponse(BaseModel):
    input_hash: str
    checks: list[CheckRow]


class BuildRequest(BaseModel):
    model: Literal["hubbard", "coulomb1d"]
    params: dict = Field(default_factory=dict)


class BundleResponse(BaseModel):
    bundle: dict


class EnergyRequest(BaseModel):
    bundle: dict
    options: SolveOptions = SolveOptions()


class XNormRequest(BaseModel):
    bundle: dict
    gamma: Optional[list] = None  # nested [re, im] matrix; ground-state RDM if omitted
    options: SolveOptions = SolveOptions()


class FrdmRequest(BaseModel):
    bundle: dict
    gamma: Optional[list] = None
    options: SolveOptions = SolveOptions()


class FdftRequest(BaseModel):
    bundle: dict
    rho: Optional[list[float]] = None  # cell densities; ground-state density if omitted
    options: SolveOptions = SolveOptions()


class PreimageRequest(BaseModel):
    bundle: dict
    gamma: Optional[list] = None
    method: Literal["coleman", "telescope"] = "coleman"
    options: SolveOptions = SolveOptions()


class PreimageResponse(BaseModel):
    gamma_n: list
    roundtrip_defect: float
    method: str
    rows: list[ResultRow]


class BoundsRequest(BaseModel):
    bundle: dict
    b_grid: list[float] = Field(default_factory=lambda: [10.0 ** k for k in range(7)])
    options: SolveOptions = SolveOptions()


class SweepSpecModel(BaseModel):
    parameter: str
    start: float
    stop: float
    count: int
    quantity: Literal["E", "E_RDM", "F_RDM", "F", "xnorm", "bound-curve"]


class SweepRequest(BaseModel):
    bundle: dict
    spec: SweepSpecModel
    options: SolveOptions = SolveOptions()


class CheckRequest(BaseModel):
    bundle: dict
    selector: str = "all"
    options: SolveOptions = SolveOptions()


class ErrorBody(BaseModel):
    kind: Literal["validation", "infeasible", "stall"]
    message: str
