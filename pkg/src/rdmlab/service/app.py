"""FastAPI application wrapping the core package.

Every CLI command maps onto one endpoint.  Package exceptions surface as
structured 400 responses whose ``kind`` the client translates into exit
codes: validation -> 2, stall -> 3, infeasible -> 4.  Functional
evaluations that return the tagged infinite result are not errors; they
come back as rows with ``status="infeasible"``.
"""

import time

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import __version__, checks, density, functionals, sweeps, xspace
from ..bundle import OperatorBundle, build_model, decode_matrix, encode_matrix
from ..errors import InfeasibleError, SolverStall, ValidationError
from ..optim import SolverConfig
from ..rdm import coleman_preimage, partial_trace, telescope_preimage
from . import schemas


def _config(options):
    return SolverConfig(
        tol_gap=options.tol_gap, tol_feas=options.tol_feas, seed=options.seed
    )


def _load_bundle(doc):
    return OperatorBundle.from_document(doc)


def _gamma_or_ground(request_gamma, bundle, sys_spec):
    if request_gamma is not None:
        gamma = decode_matrix(request_gamma, "gamma")
        if gamma.shape != (bundle.d, bundle.d):
            raise ValidationError(
                f"gamma is {gamma.shape}, bundle has d={bundle.d}"
            )
        return gamma
    return functionals.ground_state_rdm(sys_spec, bundle.v_ext)


def _psd_shift(t):
    lo = float(np.linalg.eigvalsh(np.asarray(t))[0])
    return np.asarray(t) - min(lo, 0.0) * np.eye(t.shape[0])


def _functional_row(bundle, quantity, res):
    status = "ok"
    if res.infeasible:
        status = "infeasible"
    elif not res.converged:
        status = "stall"
    return schemas.ResultRow(
        input_hash=bundle.input_hash(), quantity=quantity, value=res.value,
        gap=res.gap, feasibility=res.feasibility if np.isfinite(res.feasibility) else 0.0,
        iterations=res.iterations, wall_time_ms=res.wall_time * 1000.0,
        status=status,
    )


def create_app():
    app = FastAPI(title="rdmlab service", version=__version__)

    @app.exception_handler(ValidationError)
    async def _validation(request, exc):
        return JSONResponse(status_code=400,
                            content={"kind": "validation", "message": str(exc)})

    @app.exception_handler(InfeasibleError)
    async def _infeasible(request, exc):
        return JSONResponse(status_code=400,
                            content={"kind": "infeasible", "message": str(exc)})

    @app.exception_handler(SolverStall)
    async def _stall(request, exc):
        return JSONResponse(status_code=400,
                            content={"kind": "stall", "message": str(exc)})

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/v1/build", response_model=schemas.BundleResponse)
    def build(req: schemas.BuildRequest):
        bundle = build_model(req.model, req.params)
        return {"bundle": bundle.to_document()}

    @app.post("/v1/energy", response_model=schemas.RowsResponse)
    def energy(req: schemas.EnergyRequest):
        bundle = _load_bundle(req.bundle)
        t0 = time.perf_counter()
        sys_spec = bundle.system(seed=req.options.seed)
        value = functionals.e_rdm(bundle.v_ext, sys_spec)
        row = schemas.ResultRow(
            input_hash=bundle.input_hash(), quantity="E", value=value,
            wall_time_ms=(time.perf_counter() - t0) * 1000.0,
        )
        return {"rows": [row]}

    @app.post("/v1/xnorm", response_model=schemas.RowsResponse)
    def xnorm(req: schemas.XNormRequest):
        bundle = _load_bundle(req.bundle)
        t0 = time.perf_counter()
        sys_spec = bundle.system(seed=req.options.seed) if req.gamma is None else None
        gamma = _gamma_or_ground(req.gamma, bundle, sys_spec)
        weight = _psd_shift(bundle.t_one)
        value = xspace.x_norm(gamma, weight)
        gap = 0.0
        iterations = 0
        if bundle.d <= xspace.ORACLE_MAX_DIM:
            oracle_value, _, report = xspace.x_norm_sdp_oracle(gamma, weight)
            gap = abs(value - oracle_value) + report.gap
            iterations = report.iterations
        row = schemas.ResultRow(
            input_hash=bundle.input_hash(), quantity="xnorm", value=value,
            gap=gap, iterations=iterations,
            wall_time_ms=(time.perf_counter() - t0) * 1000.0,
        )
        return {"rows": [row]}

    @app.post("/v1/frdm", response_model=schemas.RowsResponse)
    def frdm(req: schemas.FrdmRequest):
        bundle = _load_bundle(req.bundle)
        sys_spec = bundle.system(seed=req.options.seed)
        gamma = _gamma_or_ground(req.gamma, bundle, sys_spec)
        res = functionals.f_rdm_primal(gamma, sys_spec, _config(req.options),
                                       strict=False)
        return {"rows": [_functional_row(bundle, "F_RDM", res)]}

    @app.post("/v1/fdft", response_model=schemas.RowsResponse)
    def fdft(req: schemas.FdftRequest):
        bundle = _load_bundle(req.bundle)
        sys_spec = bundle.system(seed=req.options.seed)
        pvm = bundle.pvm()
        if req.rho is not None:
            rho = np.asarray(req.rho, dtype=float)
        else:
            gamma = functionals.ground_state_rdm(sys_spec, bundle.v_ext)
            rho = density.diagonal_map(gamma, pvm)
        res = density.f_dft(rho, sys_spec, pvm, _config(req.options), strict=False)
        return {"rows": [_functional_row(bundle, "F", res)]}

    @app.post("/v1/preimage", response_model=schemas.PreimageResponse)
    def preimage(req: schemas.PreimageRequest):
        bundle = _load_bundle(req.bundle)
        t0 = time.perf_counter()
        sys_spec = bundle.system(seed=req.options.seed)
        gamma = _gamma_or_ground(req.gamma, bundle, sys_spec)
        if req.method == "coleman":
            gamma_n = coleman_preimage(gamma, bundle.d, bundle.n_particles)
        else:
            gamma_n = telescope_preimage(gamma, bundle.n_particles)
        defect = float(np.max(np.abs(
            partial_trace(gamma_n, bundle.d, bundle.n_particles) - gamma)))
        row = schemas.ResultRow(
            input_hash=bundle.input_hash(), quantity="preimage", value=defect,
            wall_time_ms=(time.perf_counter() - t0) * 1000.0,
        )
        return {
            "gamma_n": encode_matrix(gamma_n),
            "roundtrip_defect": defect,
            "method": req.method,
            "rows": [row],
        }

    @app.post("/v1/bounds", response_model=schemas.RowsResponse)
    def bounds(req: schemas.BoundsRequest):
        bundle = _load_bundle(req.bundle)
        if bundle.v_ext is None:
            raise ValidationError("bound curves need a bundle with an external potential")
        weight = _psd_shift(bundle.t_one)
        rows = []
        for b in req.b_grid:
            t0 = time.perf_counter()
            a = xspace.min_t_bound(bundle.v_ext, weight, float(b))
            rows.append(schemas.ResultRow(
                input_hash=bundle.input_hash(), quantity="bound", param=float(b),
                value=a, wall_time_ms=(time.perf_counter() - t0) * 1000.0,
            ))
        return {"rows": rows}

    @app.post("/v1/sweep", response_model=schemas.RowsResponse)
    def sweep(req: schemas.SweepRequest):
        bundle = _load_bundle(req.bundle)
        spec = sweeps.SweepSpec(
            parameter=req.spec.parameter, start=req.spec.start,
            stop=req.spec.stop, count=req.spec.count, quantity=req.spec.quantity,
        )
        rows = sweeps.run_sweep(bundle, spec, _config(req.options))
        out = []
        for raw in rows:
            out.append(schemas.ResultRow(
                input_hash=bundle.input_hash(), quantity=spec.quantity,
                param=raw.get("param"), value=raw.get("value"),
                gap=raw.get("gap", 0.0), feasibility=raw.get("feasibility", 0.0),
                iterations=raw.get("iterations", 0),
                wall_time_ms=raw.get("wall_time_ms", 0.0),
                status=raw.get("status", "ok"), detail=raw.get("detail", ""),
            ))
        return {"rows": out}

    @app.post("/v1/check", response_model=schemas.ChecksResponse)
    def check(req: schemas.CheckRequest):
        bundle = _load_bundle(req.bundle)
        results = checks.run_check_suite(
            bundle, req.selector, seed=req.options.seed, cfg=_config(req.options)
        )
        return {
            "input_hash": bundle.input_hash(),
            "checks": [schemas.CheckRow(
                name=r.name, defect=r.defect, threshold=r.threshold,
                passed=r.passed, detail=r.detail,
            ) for r in results],
        }

    return app
