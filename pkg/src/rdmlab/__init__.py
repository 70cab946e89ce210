"""rdmlab: a finite-dimensional laboratory for reduced-density-matrix and
density functional constructions.

Core modules
------------
fock
    N-fermion sector, Slater basis indexing, ladder operators, second
    quantization.
rdm
    Partial trace, representability checks, Coleman and telescoping
    preimages.
xspace
    Kinetic-energy-weighted norms, dual norms, relative form bounds,
    polarization.
functionals
    Ground-state energy, constrained-search interaction functional and
    its concave dual.
density
    Projection-valued measures, the diagonal map, density-level norms and
    functionals.
optim
    Deterministic solver kernels shared by the above.

Service and CLI
---------------
``rdmlab.service`` exposes every operation over HTTP (FastAPI); the
``rdmlab`` command-line tool is a thin client of that service, run
in-process by default.
"""

__version__ = "0.1.0"
