import numpy as np
import pytest

from patchfem.analysis import radial_manufactured, solve
from patchfem.assembly import MaterialCoefficients, ProblemSpec, SparseSystem, assemble
from patchfem.conditioning import (CONDITION_HEADER, BasisScaling, compute_scaling, condition_row,
                                   condition_study, eq4_ratio, scaled_system, split_nodes,
                                   unit_stiffness, unscale, verify_eq4)
from patchfem.fitting import fit_mesh, unfitted
from patchfem.geometry import signed_areas
from patchfem.interface import Affine, Circle
from patchfem.linalg import SymmetricSparse
from patchfem.mesh import build_patch_mesh

QUARTER = Circle((0.0, 0.0), 0.5)


@pytest.mark.parametrize("n,macro,bubble", [(1, 4, 5), (2, 9, 16), (5, 36, 85)])
def test_split_counts(n, macro, bubble):
    f = unfitted(build_patch_mesh(n), QUARTER)
    s = split_nodes(f)
    assert (s.n_macro, s.n_bubble) == (macro, bubble)
    assert s.n_macro + s.n_bubble == f.n_vertices
    assert set(s.macro).isdisjoint(s.bubble)


def test_bubbles_vanish_on_macro_nodes():
    f = fit_mesh(build_patch_mesh(4), QUARTER)
    s = split_nodes(f)
    # every bubble node is a refinement midpoint: it is never a patch corner
    assert set(f.mesh.corners.ravel()) <= set(s.macro)
    assert set(f.mesh.midpoints.ravel()) == set(s.bubble)


def test_uniform_scaling_equal_in_interior():
    f = unfitted(build_patch_mesh(4), QUARTER)
    d = compute_scaling(f).d
    interior = ~f.mesh.boundary
    np.testing.assert_allclose(d[interior], d[interior][0], rtol=1e-14)
    assert d[interior][0] == pytest.approx(0.5)   # interior stiffness diagonal is 4


@pytest.mark.parametrize("n", [4, 8, 16])
def test_unit_energy(n):
    f = fit_mesh(build_patch_mesh(n), QUARTER)
    d = compute_scaling(f).d
    L = unit_stiffness(f).toarray() if n < 16 else None
    energy = d ** 2 * unit_stiffness(f).diagonal()
    np.testing.assert_allclose(energy, 1.0, atol=1e-12)
    if L is not None:
        e = np.eye(f.n_vertices)[n]
        assert (d[n] * e) @ L @ (d[n] * e) == pytest.approx(1.0, abs=1e-12)


def sliver_fit():
    # the line x + y = 1 + 5e-4 passes 1e-3 of an edge from the macro vertex (1/2, 1/2)
    return fit_mesh(build_patch_mesh(2), Affine((1.0, 1.0), 1.0 + 5e-4))


def test_sliver_scaling():
    f = sliver_fit()
    assert any(abs(c.r - 1e-3) < 1e-9 for c in f.configs.values())
    sc = compute_scaling(f)
    moved = np.flatnonzero(f.moved)
    d0 = compute_scaling(unfitted(f.base, f.phi)).d
    assert sc.d[moved].min() < 0.1 * d0[moved].min()
    spec = ProblemSpec(MaterialCoefficients(1.0, 1.0), lambda x, y: np.zeros(np.shape(x)),
                       lambda x, y: np.zeros(np.shape(x)), f.phi)
    A_hat, _ = scaled_system(assemble(f, spec), sc).reduced()
    np.testing.assert_allclose(A_hat.diagonal(), 1.0, atol=1e-12)


def test_scaling_rejects_nonpositive():
    with pytest.raises(ValueError):
        BasisScaling(np.array([1.0, 0.0]))


def test_scaled_system_identity_and_diagonal():
    A = SymmetricSparse.from_dense(np.diag([2.0, 3.0, 5.0]))
    s = SparseSystem(A, np.array([1.0, 2.0, 3.0]), np.array([2]), np.array([4.0]))
    same = scaled_system(s, BasisScaling(np.ones(3)))
    np.testing.assert_array_equal(same.matrix.toarray(), A.toarray())
    np.testing.assert_array_equal(same.rhs, s.rhs)
    d = np.array([0.5, 2.0, 4.0])
    sc = scaled_system(s, BasisScaling(d))
    np.testing.assert_allclose(sc.matrix.diagonal(), d ** 2 * np.array([2.0, 3.0, 5.0]))
    np.testing.assert_allclose(sc.rhs, d * s.rhs)
    np.testing.assert_allclose(unscale(sc.expand(np.zeros(2)), BasisScaling(d))[2], 4.0)
    with pytest.raises(ValueError, match="dimension mismatch"):
        scaled_system(s, BasisScaling(np.ones(2)))


def test_scaled_and_unscaled_solutions_agree(interface_problem):
    f = fit_mesh(build_patch_mesh(8), QUARTER)
    a = solve(f, interface_problem.spec, scaling=True).values
    b = solve(f, interface_problem.spec, scaling=False).values
    assert np.linalg.norm(a - b) <= 1e-8 * np.linalg.norm(b)


def test_condition_study_small(interface_problem):
    rows = condition_study(interface_problem.spec, n0=4, levels=3)
    assert [r.n for r in rows] == [4, 8, 16]
    for a, b in zip(rows, rows[1:]):
        assert 3 <= b.cond2 / a.cond2 <= 6
    assert len(CONDITION_HEADER.split(",")) == len(rows[0].csv().split(","))
    with pytest.raises(ValueError):
        condition_study(interface_problem.spec, levels=1)


def test_condition_row_offsets_radius(interface_problem):
    row = condition_row(interface_problem.spec, 4, -1, True, radius_offset=0.1)
    assert row.radius_offset == 0.1 and row.scaled
    with pytest.raises(ValueError):
        condition_row(ProblemSpec(interface_problem.spec.coefficients, interface_problem.spec.source,
                                  interface_problem.spec.dirichlet, Affine((1, 0), 0.5)),
                      4, -1, True, radius_offset=0.1)


def test_scaled_diagonal_is_one_for_unit_coefficient():
    f = fit_mesh(build_patch_mesh(6), QUARTER)
    spec = radial_manufactured(1.0, 1.0).spec
    A_hat, _ = scaled_system(assemble(f, spec), compute_scaling(f)).reduced()
    np.testing.assert_allclose(A_hat.diagonal(), 1.0, atol=1e-12)


# ---- sampled local stability ---------------------------------------------------------

def test_single_bubble_ratio_closed_form():
    f = fit_mesh(build_patch_mesh(4), QUARTER)
    sc = compute_scaling(f)
    for i in split_nodes(f).bubble[::7]:
        # ||d phi||^2 over N_i is d^2 |N_i| / 6; normalizing by |N_i| leaves d^2 / 6
        assert eq4_ratio(f, sc, int(i), {int(i): 1.0}) == pytest.approx(np.sqrt(6) / sc.d[i],
                                                                           rel=1e-12)
        elems = np.flatnonzero((f.elements == i).any(axis=1))
        area = signed_areas(f.vertices[f.elements[elems]]).sum()
        raw = eq4_ratio(f, sc, int(i), {int(i): 1.0}, normalize=False)
        assert raw == pytest.approx(1 / (sc.d[i] * np.sqrt(area / 6)), rel=1e-12)


def test_single_bubble_ratio_uniform():
    f = unfitted(build_patch_mesh(4), QUARTER)
    sc = compute_scaling(f)
    interior = [int(i) for i in split_nodes(f).bubble if not f.mesh.boundary[i]]
    vals = [eq4_ratio(f, sc, i, {i: 1.0}) for i in interior]
    np.testing.assert_allclose(vals, vals[0], rtol=1e-12)


def test_verify_eq4_properties():
    f = fit_mesh(build_patch_mesh(4), QUARTER)
    sc = compute_scaling(f)
    worst = verify_eq4(f, sc, samples=4)
    singles = max(eq4_ratio(f, sc, int(i), {int(i): 1.0}) for i in split_nodes(f).bubble)
    assert worst >= singles
    assert verify_eq4(f, sc, samples=4) == worst
    with pytest.raises(ValueError):
        verify_eq4(f, sc, samples=0)
