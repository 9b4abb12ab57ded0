"""
Symmetric sparse matrices, conjugate gradients, and extreme eigenvalues.

Storage is delegated to :class:`scipy.sparse.csr_array`; the solver and the
eigenvalue iterations are written out so that their stopping rules and
failure modes are explicit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


class ConvergenceError(RuntimeError):
    def __init__(self, msg: str, residual: float = float("nan"), iterations: int = 0):
        super().__init__(msg)
        self.residual = residual
        self.iterations = iterations


class NotSPDError(ArithmeticError):
    pass


class SymmetricSparse:
    """Compressed-row symmetric matrix.

    Column indices are sorted and duplicate-free within each row, and the
    sparsity pattern is symmetric.  Values are checked for exact symmetry
    unless ``check_values=False``.
    """

    def __init__(self, matrix, check_values: bool = True):
        A = sp.csr_array(matrix, dtype=float)
        A.sum_duplicates()
        A.sort_indices()
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"matrix must be square, got {A.shape}")
        pattern = A.copy()
        pattern.data = np.ones_like(pattern.data)
        if (pattern - pattern.T).count_nonzero():
            raise ValueError("sparsity pattern is not symmetric")
        if check_values and (A != A.T).count_nonzero():
            raise ValueError("matrix values are not symmetric")
        self._A = A

    @classmethod
    def from_dense(cls, a) -> "SymmetricSparse":
        return cls(sp.csr_array(np.asarray(a, dtype=float)))

    @property
    def shape(self) -> tuple[int, int]:
        return self._A.shape

    @property
    def n(self) -> int:
        return self._A.shape[0]

    @property
    def indptr(self) -> np.ndarray:
        return self._A.indptr

    @property
    def indices(self) -> np.ndarray:
        return self._A.indices

    @property
    def data(self) -> np.ndarray:
        return self._A.data

    @property
    def csr(self) -> sp.csr_array:
        return self._A

    def diagonal(self) -> np.ndarray:
        return self._A.diagonal()

    def toarray(self) -> np.ndarray:
        return self._A.toarray()

    def submatrix(self, rows: np.ndarray) -> "SymmetricSparse":
        return SymmetricSparse(self._A[rows][:, rows], check_values=False)

    def congruence(self, d: np.ndarray) -> "SymmetricSparse":
        """``D A D`` with ``D = diag(d)``."""
        D = sp.diags_array(np.asarray(d, dtype=float))
        return SymmetricSparse(D @ self._A @ D, check_values=False)

    def __matmul__(self, x):
        return matvec(self, x)


def matvec(A: SymmetricSparse, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != A.n:
        raise ValueError(f"dimension mismatch: matrix {A.shape}, vector {x.shape}")
    return A.csr @ x


@dataclass(frozen=True)
class CGResult:
    x: np.ndarray
    iterations: int
    residual: float


def cg_solve(A: SymmetricSparse, b, rel_tol: float = 1e-10, max_iter: int | None = None,
             x0=None) -> CGResult:
    """Unpreconditioned conjugate gradients.

    Stops once the true residual satisfies ``|b - A x| <= rel_tol |b|``; the
    recursively updated residual is only used to decide when to check.
    """
    if not 0 < rel_tol < 1:
        raise ValueError("rel_tol must lie in (0, 1)")
    b = np.asarray(b, dtype=float)
    if b.shape != (A.n,):
        raise ValueError(f"dimension mismatch: matrix {A.shape}, rhs {b.shape}")
    if max_iter is None:
        max_iter = max(10 * A.n, 100)
    bnorm = np.linalg.norm(b)
    x = np.zeros(A.n) if x0 is None else np.array(x0, dtype=float)
    if bnorm == 0.0:
        return CGResult(np.zeros(A.n), 0, 0.0)
    target = rel_tol * bnorm
    r = b - matvec(A, x)
    rr = r @ r
    if np.sqrt(rr) <= target:
        return CGResult(x, 0, float(np.sqrt(rr)))
    p = r.copy()
    for it in range(1, max_iter + 1):
        Ap = matvec(A, p)
        pAp = p @ Ap
        if pAp <= 0.0:
            raise NotSPDError("matrix not SPD")
        alpha = rr / pAp
        x += alpha * p
        r -= alpha * Ap
        rr_new = r @ r
        if np.sqrt(rr_new) <= target:
            r = b - matvec(A, x)
            rr_new = r @ r
            res = float(np.sqrt(rr_new))
            if res <= target:
                return CGResult(x, it, res)
            # recursive residual drifted; restart the search direction
            p = r.copy()
            rr = rr_new
            continue
        p = r + (rr_new / rr) * p
        rr = rr_new
    res = float(np.linalg.norm(b - matvec(A, x)))
    raise ConvergenceError(f"CG did not converge in {max_iter} iterations (residual {res:.3e})",
                           residual=res, iterations=max_iter)


def _rayleigh(A: SymmetricSparse, v: np.ndarray) -> float:
    return float(v @ matvec(A, v) / (v @ v))


def power_iteration(A: SymmetricSparse, tol: float = 1e-8, max_iter: int = 100_000,
                    seed: int = 0) -> float:
    """Largest eigenvalue by power iteration on the Rayleigh quotient."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.n)
    v /= np.linalg.norm(v)
    lam = _rayleigh(A, v)
    for _ in range(max_iter):
        w = matvec(A, v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        new = _rayleigh(A, v)
        if abs(new - lam) <= tol * abs(new):
            return new
        lam = new
    raise ConvergenceError(f"power iteration did not converge in {max_iter} steps")


def inverse_iteration(A: SymmetricSparse, tol: float = 1e-8, max_iter: int = 10_000,
                      seed: int = 1, inner_tol: float | None = None) -> float:
    """Smallest eigenvalue by inverse iteration with CG inner solves."""
    if inner_tol is None:
        inner_tol = min(1e-10, tol * 1e-2)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(A.n)
    v /= np.linalg.norm(v)
    lam = _rayleigh(A, v)
    for _ in range(max_iter):
        w = cg_solve(A, v, rel_tol=inner_tol, x0=v / lam if lam > 0 else None).x
        v = w / np.linalg.norm(w)
        new = _rayleigh(A, v)
        if new <= 0.0:
            raise NotSPDError("matrix not SPD")
        if abs(new - lam) <= tol * abs(new):
            return new
        lam = new
    raise ConvergenceError(f"inverse iteration did not converge in {max_iter} steps")


def extreme_eigs(A: SymmetricSparse, tol: float = 1e-8, seed: int = 0) -> tuple[float, float]:
    """``(lambda_min, lambda_max)`` of an SPD matrix."""
    return inverse_iteration(A, tol, seed=seed + 1), power_iteration(A, tol, seed=seed)


def condition_number(A: SymmetricSparse, tol: float = 1e-8, seed: int = 0) -> float:
    lo, hi = extreme_eigs(A, tol, seed)
    return hi / lo
