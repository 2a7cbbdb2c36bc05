import numpy as np
import pytest

from continual_replay.errors import (
    DimensionMismatch,
    InconsistentSystem,
    NonFiniteInput,
)
from continual_replay.linalg_core import (
    Projector,
    Subspace,
    as_vector,
    complement_basis,
    min_norm_solve,
    null_projector,
    op_norm,
    orthonormal_basis,
    principal_angles,
    projector_onto,
)


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
@pytest.mark.parametrize("d,k,n", [(3, 1, 4), (5, 3, 3), (8, 8, 12), (6, 2, 2)])
def test_orthonormal_basis_spans_rows(seed, d, k, n):
    rng = np.random.default_rng(seed)
    rows = rng.standard_normal((n, k)) @ rng.standard_normal((k, d))
    s = orthonormal_basis(rows)
    assert s.rank == min(k, n)
    np.testing.assert_allclose(s.basis.T @ s.basis, np.eye(s.rank), atol=1e-12)
    # every row is reproduced by projection onto the basis
    P = s.basis @ s.basis.T
    np.testing.assert_allclose(rows @ P, rows, atol=1e-10)


def test_orthonormal_basis_zero_rows():
    s = orthonormal_basis(np.zeros((0, 4)))
    assert s.rank == 0 and s.ambient_dim == 4
    s = orthonormal_basis(np.zeros((3, 4)))
    assert s.rank == 0


def test_subspace_rejects_non_orthonormal():
    with pytest.raises(DimensionMismatch):
        Subspace(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_subspace_rejects_wrong_declared_shape():
    basis = np.eye(3)[:, :2]
    with pytest.raises(DimensionMismatch):
        Subspace(basis, ambient_dim=4)
    with pytest.raises(DimensionMismatch):
        Subspace(basis, rank=1)


@pytest.mark.parametrize("seed", [10, 11, 12])
def test_projector_properties(seed):
    rng = np.random.default_rng(seed)
    s = orthonormal_basis(rng.standard_normal((3, 7)))
    onto = projector_onto(s)
    for proj in (onto, null_projector(onto)):
        m = proj.matrix
        np.testing.assert_allclose(m, m.T, atol=1e-12)
        np.testing.assert_allclose(m @ m, m, atol=1e-12)
    total = onto.matrix + null_projector(onto).matrix
    np.testing.assert_allclose(total, np.eye(7), atol=1e-12)


def test_projector_type_rejects_non_idempotent():
    with pytest.raises(DimensionMismatch):
        Projector(np.array([[0.5, 0.0], [0.0, 1.0]]))


@pytest.mark.parametrize("seed", [0, 7, 21])
def test_complement_basis(seed):
    rng = np.random.default_rng(seed)
    s = orthonormal_basis(rng.standard_normal((2, 6)))
    c = complement_basis(s)
    assert c.rank == 6 - s.rank
    stacked = np.hstack([s.basis, c.basis])
    np.testing.assert_allclose(stacked.T @ stacked, np.eye(6), atol=1e-12)


def test_principal_angles_known_plane():
    s1 = Subspace(np.eye(3)[:, :1])
    theta = 0.3
    v = np.array([np.cos(theta), np.sin(theta), 0.0])
    s2 = Subspace(v[:, None])
    np.testing.assert_allclose(principal_angles(s1, s2), [theta], atol=1e-12)
    # symmetric in the argument order
    np.testing.assert_allclose(
        principal_angles(s1, s2), principal_angles(s2, s1), atol=1e-15
    )


def test_principal_angles_same_and_orthogonal():
    s1 = Subspace(np.eye(4)[:, :2])
    np.testing.assert_allclose(principal_angles(s1, s1), [0.0, 0.0], atol=1e-7)
    s2 = Subspace(np.eye(4)[:, 2:])
    np.testing.assert_allclose(
        principal_angles(s1, s2), [np.pi / 2, np.pi / 2], atol=1e-12
    )


def test_principal_angles_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        principal_angles(Subspace(np.eye(3)[:, :1]), Subspace(np.eye(4)[:, :1]))


def test_op_norm():
    assert op_norm(np.zeros((0, 3))) == 0.0
    np.testing.assert_allclose(op_norm(np.diag([3.0, -5.0])), 5.0, atol=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
def test_min_norm_solve_optimality(seed):
    rng = np.random.default_rng(seed)
    d, n = 8, 3
    X = rng.standard_normal((n, d))
    y = X @ rng.standard_normal(d)
    w = min_norm_solve(X, y)
    np.testing.assert_allclose(X @ w, y, atol=1e-9)
    # minimality: the solution carries no null-space component
    s = orthonormal_basis(X)
    np.testing.assert_allclose(s.basis @ (s.basis.T @ w), w, atol=1e-9)
    np.testing.assert_allclose(w, np.linalg.pinv(X) @ y, atol=1e-9)


def test_min_norm_solve_inconsistent():
    X = np.array([[1.0, 0.0], [1.0, 0.0]])
    with pytest.raises(InconsistentSystem):
        min_norm_solve(X, np.array([1.0, 2.0]))


def test_min_norm_solve_zero_labels_ok():
    # labels that are zero up to rounding must not be rejected
    X = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    w = min_norm_solve(X, np.array([1e-17, -1e-17]))
    assert np.linalg.norm(w) < 1e-10


def test_min_norm_solve_empty():
    np.testing.assert_allclose(min_norm_solve(np.zeros((0, 5)), np.zeros(0)), np.zeros(5))


def test_as_vector_rejects_non_finite():
    with pytest.raises(NonFiniteInput):
        as_vector(np.array([1.0, np.nan]), "v")
