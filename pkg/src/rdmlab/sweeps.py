"""Parameter sweeps over bundles, evaluated on a worker pool.

A sweep rebuilds the bundle's recorded model with one parameter replaced
per grid point (or rescales the stored external potential for the
pseudo-parameter ``vscale``, or treats the point as the offset ``b`` for
``bound-curve``) and evaluates the requested quantity.  Rows come back in
grid order regardless of completion order; per-point solver failures are
reported in the row and the sweep continues.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import bundle as bundle_mod
from . import density, functionals, xspace
from .errors import RdmLabError, SolverStall, ValidationError
from .optim import SolverConfig

QUANTITIES = ("E", "E_RDM", "F_RDM", "F", "xnorm", "bound-curve")


@dataclass
class SweepSpec:
    parameter: str
    start: float
    stop: float
    count: int
    quantity: str

    def __post_init__(self):
        if self.count < 2:
            raise ValidationError("a sweep needs at least two grid points")
        if self.quantity not in QUANTITIES:
            raise ValidationError(
                f"unknown quantity {self.quantity!r}; have {QUANTITIES}"
            )
        for value in (self.start, self.stop):
            if not np.isfinite(value):
                raise ValidationError("sweep grid must be finite")

    def grid(self):
        return np.linspace(self.start, self.stop, self.count)


def _point_bundle(base, spec, value):
    if spec.quantity == "bound-curve":
        return base
    if spec.parameter == "vscale":
        doc = base.to_document()
        out = bundle_mod.OperatorBundle.from_document(doc)
        v = out.v_ext if out.v_ext is not None else np.zeros((out.d, out.d))
        out.v_ext = value * v
        return out
    return bundle_mod.rebuild_with(base, **{spec.parameter: value})


def _psd_shift(t):
    lo = float(np.linalg.eigvalsh(np.asarray(t))[0])
    return np.asarray(t) - min(lo, 0.0) * np.eye(t.shape[0])


def _evaluate(base, spec, value, cfg):
    t0 = time.perf_counter()
    row = {
        "param": float(value), "value": None, "gap": 0.0, "feasibility": 0.0,
        "iterations": 0, "status": "ok",
    }
    try:
        point = _point_bundle(base, spec, value)
        if spec.quantity == "bound-curve":
            v = point.v_ext if point.v_ext is not None else np.zeros((point.d, point.d))
            row["value"] = xspace.min_t_bound(v, _psd_shift(point.t_one), float(value))
        elif spec.quantity in ("E", "E_RDM"):
            row["value"] = functionals.e_rdm(point.v_ext, point.system())
        elif spec.quantity == "xnorm":
            sys_spec = point.system()
            gamma = functionals.ground_state_rdm(sys_spec, point.v_ext)
            row["value"] = xspace.x_norm(gamma, _psd_shift(point.t_one))
        elif spec.quantity == "F_RDM":
            sys_spec = point.system()
            gamma = functionals.ground_state_rdm(sys_spec, point.v_ext)
            res = functionals.f_rdm_primal(gamma, sys_spec, cfg, strict=False)
            row.update(value=res.value, gap=res.gap, feasibility=res.feasibility,
                       iterations=res.iterations,
                       status="ok" if res.converged else "stall")
        elif spec.quantity == "F":
            sys_spec = point.system()
            pvm = point.pvm()
            gamma = functionals.ground_state_rdm(sys_spec, point.v_ext)
            rho = density.diagonal_map(gamma, pvm)
            res = density.f_dft(rho, sys_spec, pvm, cfg, strict=False)
            row.update(value=res.value, gap=res.gap, feasibility=res.feasibility,
                       iterations=res.iterations,
                       status="ok" if res.converged else "stall")
    except SolverStall as exc:
        row["status"] = "stall"
        if exc.report is not None and hasattr(exc.report, "gap"):
            row["gap"] = float(exc.report.gap)
    except RdmLabError as exc:
        row["status"] = "error"
        row["detail"] = str(exc)
    row["wall_time_ms"] = (time.perf_counter() - t0) * 1000.0
    return row


def run_sweep(bundle, spec, cfg=SolverConfig(), max_workers=None):
    """Evaluate the sweep grid; one result row per point, in grid order."""
    grid = spec.grid()
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = [pool.submit(_evaluate, bundle, spec, v, cfg) for v in grid]
        return [f.result() for f in futures]
