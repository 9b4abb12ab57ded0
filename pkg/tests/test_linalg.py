import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from patchfem.linalg import (ConvergenceError, NotSPDError, SymmetricSparse, cg_solve,
                             condition_number, extreme_eigs, inverse_iteration, matvec,
                             power_iteration)


def laplacian_1d(n):
    return SymmetricSparse(sp.diags_array([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)],
                                          offsets=[-1, 0, 1]))


def random_spd(rng, n, cond=100.0):
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    lam = np.geomspace(1.0, cond, n)
    A = (Q * lam) @ Q.T
    return (A + A.T) / 2


# ---- storage ----------------------------------------------------------------------

def test_storage_invariants():
    A = SymmetricSparse(sp.coo_array(([1.0, 2.0, 2.0, 3.0, 0.5], ([0, 1, 0, 1, 1], [0, 0, 1, 1, 1])),
                                     shape=(2, 2)))
    np.testing.assert_array_equal(A.toarray(), [[1, 2], [2, 3.5]])
    for r in range(A.n):
        cols = A.indices[A.indptr[r]:A.indptr[r + 1]]
        assert np.all(np.diff(cols) > 0)


def test_rejects_unsymmetric():
    with pytest.raises(ValueError, match="not symmetric"):
        SymmetricSparse.from_dense([[1, 2], [3, 4]])
    with pytest.raises(ValueError, match="pattern"):
        SymmetricSparse.from_dense([[1, 2], [0, 4]])
    with pytest.raises(ValueError, match="square"):
        SymmetricSparse(sp.csr_array(np.ones((2, 3))))


def test_matvec_examples():
    x = np.array([3.0, -1.0, 2.0])
    np.testing.assert_array_equal(matvec(SymmetricSparse.from_dense(np.eye(3)), x), x)
    np.testing.assert_array_equal(SymmetricSparse.from_dense(np.diag([1.0, 4.0])) @ [1, 1], [1, 4])
    with pytest.raises(ValueError, match="dimension mismatch"):
        matvec(SymmetricSparse.from_dense(np.eye(3)), np.ones(2))


def test_congruence():
    A = SymmetricSparse.from_dense([[2.0, 1.0], [1.0, 3.0]])
    d = np.array([2.0, 0.5])
    np.testing.assert_allclose(A.congruence(d).toarray(), np.diag(d) @ A.toarray() @ np.diag(d))


# ---- CG ----------------------------------------------------------------------------

def test_cg_identity_one_step():
    b = np.array([1.0, -2.0, 5.0])
    r = cg_solve(SymmetricSparse.from_dense(np.eye(3)), b)
    np.testing.assert_allclose(r.x, b)
    assert r.iterations == 1


def test_cg_two_by_two():
    r = cg_solve(SymmetricSparse.from_dense([[4.0, 1.0], [1.0, 3.0]]), [1.0, 2.0], rel_tol=1e-14)
    np.testing.assert_allclose(r.x, [1 / 11, 7 / 11], atol=1e-15)
    assert r.iterations <= 2


@pytest.mark.parametrize("n", [1, 5, 17, 50])
def test_cg_matches_dense(n, rng):
    A = random_spd(rng, n)
    b = rng.standard_normal(n)
    r = cg_solve(SymmetricSparse.from_dense(A), b, rel_tol=1e-14)
    x = np.linalg.solve(A, b)
    assert np.linalg.norm(r.x - x) <= 1e-10 * np.linalg.norm(x)
    assert r.iterations <= 3 * n


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 40), st.integers(0, 2**31), st.floats(1e-12, 1e-3))
def test_cg_residual_bound(n, seed, tol):
    rng = np.random.default_rng(seed)
    A = SymmetricSparse.from_dense(random_spd(rng, n, 1e3))
    b = rng.standard_normal(n)
    r = cg_solve(A, b, rel_tol=tol)
    true = np.linalg.norm(b - A @ r.x)
    assert true <= tol * np.linalg.norm(b)
    assert r.residual == pytest.approx(true, rel=1e-12, abs=1e-300)


def test_cg_zero_rhs():
    r = cg_solve(laplacian_1d(5), np.zeros(5))
    assert r.iterations == 0 and not r.x.any()


def test_cg_indefinite():
    with pytest.raises(NotSPDError, match="matrix not SPD"):
        cg_solve(SymmetricSparse.from_dense(np.diag([1.0, -1.0])), [1.0, 1.0])


def test_cg_nonconvergence_carries_residual():
    A = laplacian_1d(200)
    with pytest.raises(ConvergenceError) as exc:
        cg_solve(A, np.ones(200), rel_tol=1e-12, max_iter=3)
    assert exc.value.residual > 0 and exc.value.iterations == 3


def test_cg_bad_arguments():
    A = laplacian_1d(4)
    with pytest.raises(ValueError):
        cg_solve(A, np.ones(4), rel_tol=0.0)
    with pytest.raises(ValueError):
        cg_solve(A, np.ones(3))


# ---- eigenvalues ----------------------------------------------------------------------

@pytest.mark.parametrize("d,expected", [([1.0, 4.0], (1, 4)), ([2.0, 2.0], (2, 2))])
def test_extreme_eigs_diagonal(d, expected):
    lo, hi = extreme_eigs(SymmetricSparse.from_dense(np.diag(d)))
    assert (lo, hi) == pytest.approx(expected, rel=1e-8)


def test_extreme_eigs_laplacian():
    lo, hi = extreme_eigs(laplacian_1d(10))
    k = np.arange(1, 11)
    exact = 2 - 2 * np.cos(k * np.pi / 11)
    assert lo == pytest.approx(exact.min(), abs=1e-6)
    assert hi == pytest.approx(exact.max(), abs=1e-6)
    assert lo == pytest.approx(0.08101, abs=1e-5)
    assert hi == pytest.approx(3.91899, abs=1e-5)


def test_extreme_eigs_bracket_rayleigh(rng):
    A = random_spd(rng, 30, 50.0)
    S = SymmetricSparse.from_dense(A)
    lo, hi = extreme_eigs(S)
    X = rng.standard_normal((100, 30))
    q = np.einsum("ki,ij,kj->k", X, A, X) / np.einsum("ki,ki->k", X, X)
    assert np.all(q >= lo * (1 - 1e-8)) and np.all(q <= hi * (1 + 1e-8))


@pytest.mark.parametrize("n", [10, 60, 200])
def test_condition_matches_dense(n, rng):
    A = random_spd(rng, n, 40.0)
    d = 1 / np.sqrt(np.diag(A))
    S = SymmetricSparse.from_dense(A).congruence(d)
    ev = np.linalg.eigvalsh(S.toarray())
    assert condition_number(S) == pytest.approx(ev[-1] / ev[0], rel=1e-2)


def test_iterations_deterministic():
    A = laplacian_1d(30)
    assert power_iteration(A) == power_iteration(A)
    assert inverse_iteration(A) == inverse_iteration(A)
