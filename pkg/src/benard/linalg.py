"""Symmetric positive definite sparse solves behind one small interface."""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SolverError

METHODS = ("direct", "cg", "amg")


class SpdSolver:
    """Reusable solver for a fixed SPD matrix.

    ``direct`` factors once with SuperLU; ``cg`` is Jacobi-preconditioned
    conjugate gradients; ``amg`` preconditions CG with smoothed aggregation.
    All three are deterministic for a given matrix and right-hand side.
    """

    def __init__(self, A: sp.spmatrix, method: str = "direct", rtol: float = 1e-12, maxiter: int = 20000):
        if method not in METHODS:
            raise ValueError(f"unknown solver method {method!r}")
        self.A = A.tocsr()
        self.method = method
        self.rtol = rtol
        self.maxiter = maxiter
        self.last_iterations = 0
        if method == "direct":
            self._lu = spla.splu(self.A.tocsc())
        elif method == "cg":
            d = self.A.diagonal()
            self._M = sp.diags(1.0 / d)
        else:
            import pyamg

            self._M = pyamg.smoothed_aggregation_solver(self.A).aspreconditioner(cycle="V")

    def solve(self, b: np.ndarray, x0: np.ndarray | None = None) -> np.ndarray:
        if self.method == "direct":
            self.last_iterations = 1
            return self._lu.solve(b)
        count = [0]

        def _cb(_):
            count[0] += 1

        x, info = spla.cg(
            self.A, b, x0=x0, rtol=self.rtol, atol=0.0, maxiter=self.maxiter, M=self._M, callback=_cb
        )
        self.last_iterations = count[0]
        if info != 0:
            res = float(np.linalg.norm(b - self.A @ x))
            raise SolverError(f"{self.method} did not converge (info={info})", residual=res)
        return x


def auto_method(n_unknowns: int, dim: int = 2) -> str:
    """Direct factorisation for desk-size 2D systems, AMG-CG otherwise.

    3D sparse LU suffers heavy fill-in, so 3D systems always go to AMG
    unless they are tiny.
    """
    limit = 200000 if dim == 2 else 5000
    return "direct" if n_unknowns <= limit else "amg"
