"""Self-describing operator-bundle documents and the model builders.

A bundle is a single UTF-8 JSON document (``format_version: 1``) holding
everything a command needs: dimensions, the one-body kinetic matrix, the
sparse two-body interaction, the atom measure (as a partition of basis
indices or as dense projections), optional external potential, and
metadata.  Complex matrices are stored as nested ``[re, im]`` pairs.
Serialization is canonical (sorted keys, fixed separators), so the
save/load roundtrip is byte-exact and documents hash stably.
"""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .density import PVM
from .errors import (
    BundleFormatError,
    DimensionTooLarge,
    SpinRequiredForU,
    ValidationError,
)
from .fock import MAX_ORBITALS, TwoBodyTensor, require_hermitian
from .functionals import SystemSpec

FORMAT_VERSION = 1


def encode_matrix(m):
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def decode_matrix(data, what="matrix"):
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise BundleFormatError(f"{what}: malformed complex matrix") from exc
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise BundleFormatError(
            f"{what}: expected a square matrix of [re, im] pairs, got shape {arr.shape}"
        )
    return arr[..., 0] + 1j * arr[..., 1]


@dataclass
class OperatorBundle:
    d: int
    n_particles: int
    t_one: np.ndarray
    two_body: TwoBodyTensor
    pvm_cells: list | None = None
    pvm_projections: list | None = None
    weights: np.ndarray = None
    v_ext: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.d < 1:
            raise BundleFormatError(f"d must be positive, got {self.d}")
        if not 0 <= self.n_particles <= self.d:
            raise BundleFormatError(
                f"particle number {self.n_particles} outside [0, {self.d}]"
            )
        self.t_one = np.asarray(self.t_one, dtype=complex)
        require_hermitian(self.t_one, "bundle kinetic matrix")
        if self.t_one.shape != (self.d, self.d):
            raise BundleFormatError(
                f"kinetic matrix shape {self.t_one.shape} does not match d={self.d}"
            )
        if self.v_ext is not None:
            self.v_ext = np.asarray(self.v_ext, dtype=complex)
            require_hermitian(self.v_ext, "bundle external potential")
            if self.v_ext.shape != (self.d, self.d):
                raise BundleFormatError("external potential shape does not match d")
        if (self.pvm_cells is None) == (self.pvm_projections is None):
            raise BundleFormatError(
                "exactly one of pvm_cells / pvm_projections must be given"
            )
        if self.pvm_projections is not None:
            self.pvm_projections = [
                decode_matrix(p, "pvm projection") if isinstance(p, list)
                else np.asarray(p, dtype=complex)
                for p in self.pvm_projections
            ]
        if self.weights is None:
            self.weights = np.ones(self.n_atoms)
        self.weights = np.asarray(self.weights, dtype=float)
        self.pvm()  # validates projections / partition and weights

    @property
    def n_atoms(self):
        if self.pvm_cells is not None:
            return len(self.pvm_cells)
        return len(self.pvm_projections)

    def pvm(self):
        if self.pvm_cells is not None:
            return PVM.from_partition(self.pvm_cells, self.d, self.weights)
        return PVM(list(self.pvm_projections), self.weights)

    def system(self, seed=0):
        return SystemSpec(
            d=self.d, n_particles=self.n_particles, t_one=self.t_one,
            two_body=self.two_body, seed=seed,
        )

    def to_document(self):
        doc = {
            "format_version": FORMAT_VERSION,
            "d": self.d,
            "n_particles": self.n_particles,
            "t_one": encode_matrix(self.t_one),
            "two_body": {
                "interaction": bool(self.two_body.interaction),
                "entries": [
                    [int(p), int(q), int(r), int(s), [float(v.real), float(v.imag)]]
                    for p, q, r, s, v in self.two_body.entries
                ],
            },
            "weights": [float(w) for w in self.weights],
            "metadata": self.metadata,
        }
        if self.pvm_cells is not None:
            doc["pvm"] = {"kind": "partition", "cells": [list(map(int, c)) for c in self.pvm_cells]}
        else:
            doc["pvm"] = {
                "kind": "projections",
                "matrices": [encode_matrix(p) for p in self.pvm_projections],
            }
        if self.v_ext is not None:
            doc["v_ext"] = encode_matrix(self.v_ext)
        return doc

    @classmethod
    def from_document(cls, doc):
        if not isinstance(doc, dict):
            raise BundleFormatError("bundle document must be a JSON object")
        version = doc.get("format_version")
        if version != FORMAT_VERSION:
            raise BundleFormatError(f"unsupported format_version {version}")
        for key in ("d", "n_particles", "t_one", "two_body", "pvm"):
            if key not in doc:
                raise BundleFormatError(f"bundle document is missing '{key}'")
        d = int(doc["d"])
        tb_doc = doc["two_body"]
        tensor = TwoBodyTensor(d=d, interaction=bool(tb_doc.get("interaction", True)))
        for entry in tb_doc.get("entries", []):
            p, q, r, s, (re, im) = entry
            tensor.add(int(p), int(q), int(r), int(s), complex(re, im))
        pvm_doc = doc["pvm"]
        cells = projections = None
        if pvm_doc.get("kind") == "partition":
            cells = [list(map(int, c)) for c in pvm_doc["cells"]]
        elif pvm_doc.get("kind") == "projections":
            projections = [decode_matrix(p, "pvm projection") for p in pvm_doc["matrices"]]
        else:
            raise BundleFormatError(f"unknown pvm kind {pvm_doc.get('kind')!r}")
        return cls(
            d=d,
            n_particles=int(doc["n_particles"]),
            t_one=decode_matrix(doc["t_one"], "kinetic matrix"),
            two_body=tensor,
            pvm_cells=cells,
            pvm_projections=projections,
            weights=np.asarray(doc.get("weights"), dtype=float)
            if doc.get("weights") is not None else None,
            v_ext=decode_matrix(doc["v_ext"], "external potential")
            if "v_ext" in doc else None,
            metadata=dict(doc.get("metadata", {})),
        )

    def canonical_json(self):
        return json.dumps(self.to_document(), sort_keys=True, indent=1) + "\n"

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.canonical_json())

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise BundleFormatError(f"not a JSON document: {exc}") from exc
        return cls.from_document(doc)

    def input_hash(self):
        digest = hashlib.sha256(self.canonical_json().encode("utf-8"))
        return digest.hexdigest()[:12]


def _metadata(model, params, seed):
    return {
        "model": model,
        "params": params,
        "seed": int(seed),
        "generator": f"rdmlab {__version__}",
    }


def build_hubbard(sites, spin=True, t=1.0, u=0.0, n_particles=None, seed=0):
    """Open-chain lattice model: hopping -t, on-site pair interaction u.

    With spin, orbital 2*j is site j spin-up and 2*j+1 spin-down; the
    measure partitions orbitals by site.  The interaction requires spin
    (it couples the two orbitals of a site) and must be repulsive so the
    assembled sector operator is positive, which is verified.
    """
    if sites < 1:
        raise ValidationError("need at least one site")
    d = sites * (2 if spin else 1)
    if d > MAX_ORBITALS:
        raise DimensionTooLarge(f"model needs d={d} > {MAX_ORBITALS} orbitals")
    if u != 0.0 and not spin:
        raise SpinRequiredForU("on-site interaction couples the two spin orbitals")
    if u < 0.0:
        raise ValidationError("on-site interaction must be nonnegative")
    if n_particles is None:
        n_particles = sites if spin else 1
    t_one = np.zeros((d, d))
    per_site = 2 if spin else 1
    for j in range(sites - 1):
        for sigma in range(per_site):
            a, b = per_site * j + sigma, per_site * (j + 1) + sigma
            t_one[a, b] = t_one[b, a] = -t
    tensor = TwoBodyTensor(d=d)
    if spin and u != 0.0:
        for j in range(sites):
            up, dn = 2 * j, 2 * j + 1
            tensor.add(up, dn, up, dn, u)
            tensor.add(dn, up, dn, up, u)
    cells = [list(range(per_site * j, per_site * (j + 1))) for j in range(sites)]
    bundle = OperatorBundle(
        d=d, n_particles=int(n_particles), t_one=t_one, two_body=tensor,
        pvm_cells=cells, weights=np.ones(sites),
        metadata=_metadata("hubbard", {
            "sites": int(sites), "spin": bool(spin), "t": float(t), "u": float(u),
            "n_particles": int(n_particles),
        }, seed),
    )
    # interaction positivity on the working sector
    w_sector = bundle.system().w_sector
    lo = float(np.linalg.eigvalsh(w_sector)[0]) if w_sector.size else 0.0
    if lo < -1e-10:
        raise ValidationError(f"assembled interaction has eigenvalue {lo:.3e}")
    return bundle


def build_coulomb1d(n_grid, box=10.0, softening=0.1, z=1.0, n_particles=1, seed=0):
    """Grid-discretized one-dimensional attractive soft-core model.

    T is the three-point discrete Laplacian on an open grid, the external
    potential is -z / sqrt(x^2 + softening^2) on grid midpoints, and the
    measure assigns each grid cell its width.  Grids beyond the orbital
    cap are allowed; they serve bound-curve sweeps only, and many-body
    commands on them fail with a dimension error.
    """
    if n_grid < 2:
        raise ValidationError("need at least two grid points")
    if softening <= 0:
        raise ValidationError("softening must be positive")
    h = box / n_grid
    x = -box / 2.0 + (np.arange(n_grid) + 0.5) * h
    t_one = (
        2.0 * np.eye(n_grid)
        - np.eye(n_grid, k=1)
        - np.eye(n_grid, k=-1)
    ) / h ** 2
    v_ext = np.diag(-z / np.sqrt(x ** 2 + softening ** 2))
    cells = [[i] for i in range(n_grid)]
    return OperatorBundle(
        d=n_grid, n_particles=int(n_particles), t_one=t_one,
        two_body=TwoBodyTensor(d=n_grid), pvm_cells=cells,
        weights=np.full(n_grid, h), v_ext=v_ext,
        metadata=_metadata("coulomb1d", {
            "n_grid": int(n_grid), "box": float(box),
            "softening": float(softening), "z": float(z),
            "n_particles": int(n_particles),
        }, seed),
    )


BUILDERS = {"hubbard": build_hubbard, "coulomb1d": build_coulomb1d}


def build_model(model, params):
    if model not in BUILDERS:
        raise ValidationError(f"unknown model {model!r}; have {sorted(BUILDERS)}")
    try:
        return BUILDERS[model](**params)
    except TypeError as exc:
        raise ValidationError(f"bad parameters for {model}: {exc}") from exc


def rebuild_with(bundle, **overrides):
    """Rebuild a bundle from its recorded builder with parameters replaced."""
    meta = bundle.metadata or {}
    model = meta.get("model")
    params = dict(meta.get("params", {}))
    if model not in BUILDERS:
        raise ValidationError(
            "bundle does not record a known builder; sweeps over model "
            "parameters need a built bundle"
        )
    unknown = set(overrides) - set(params)
    if unknown:
        raise ValidationError(f"parameters {sorted(unknown)} not in model {model}")
    params.update(overrides)
    return build_model(model, params)
