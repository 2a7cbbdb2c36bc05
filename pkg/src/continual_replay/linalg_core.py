"""Dense subspace and projector algebra.

Everything downstream is built from the five primitives here: SVD-based
orthonormalization, projector construction, principal angles, operator
norms, and minimum-norm linear solves. Vectors and matrices are plain
float64 numpy arrays; Subspace and Projector are thin immutable wrappers
that validate their defining invariants on construction.

Rank decisions everywhere use the same relative threshold: singular values
at or below ``tol * sigma_max`` are treated as zero, with ``tol = 1e-10``
by default. The pseudoinverse uses the identical SVD and threshold so that
projectors and min-norm solutions always agree on rank.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InconsistentSystem, NonFiniteInput

# Relative singular-value cutoff shared by every rank decision in the package.
DEFAULT_TOL = 1e-10

# How far a numerically constructed projector may drift from exact symmetry /
# idempotency before we refuse to treat it as one.
PROJECTOR_TOL = 1e-10
EIGENVALUE_TOL = 1e-8


def as_vector(v, name: str = "vector") -> np.ndarray:
    """Coerce to a finite 1-D float64 array.

    Raises:
        NonFiniteInput: if any entry is NaN or Inf.
        DimensionMismatch: if the input is not 1-D.
    """
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput(f"{name} contains NaN or Inf")
    return arr


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Coerce to a finite 2-D float64 array.

    Raises:
        NonFiniteInput: if any entry is NaN or Inf.
        DimensionMismatch: if the input is not 2-D.
    """
    arr = np.asarray(m, dtype=float)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput(f"{name} contains NaN or Inf")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    """Return a read-only copy so dataclass instances stay immutable."""
    out = np.array(arr, dtype=float, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Subspace:
    """A k-dimensional subspace of R^d held as an orthonormal basis.

    Attributes:
        basis: d x k matrix whose columns are orthonormal.
        ambient_dim: d.
        rank: k, with 0 <= k <= d.
    """

    basis: np.ndarray
    ambient_dim: int = field(default=-1)
    rank: int = field(default=-1)

    def __post_init__(self):
        basis = as_matrix(self.basis, "basis")
        d, k = basis.shape
        if self.ambient_dim not in (-1, d) or self.rank not in (-1, k):
            raise DimensionMismatch(
                f"declared (ambient_dim, rank) disagree with basis shape {basis.shape}"
            )
        object.__setattr__(self, "basis", _frozen(basis))
        object.__setattr__(self, "ambient_dim", d)
        object.__setattr__(self, "rank", k)
        if not (0 <= k <= d):
            raise DimensionMismatch(f"rank {k} outside [0, {d}]")
        gram = basis.T @ basis
        if k and np.max(np.abs(gram - np.eye(k))) > PROJECTOR_TOL:
            raise DimensionMismatch("basis columns are not orthonormal")


@dataclass(frozen=True)
class Projector:
    """An orthogonal projector: a symmetric idempotent d x d matrix."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = as_matrix(self.matrix, "projector")
        if mat.shape[0] != mat.shape[1]:
            raise DimensionMismatch(f"projector must be square, got {mat.shape}")
        object.__setattr__(self, "matrix", _frozen(mat))
        if np.max(np.abs(mat - mat.T)) > PROJECTOR_TOL:
            raise DimensionMismatch("projector is not symmetric")
        if np.max(np.abs(mat @ mat - mat)) > PROJECTOR_TOL:
            raise DimensionMismatch("projector is not idempotent")
        eigs = np.linalg.eigvalsh(mat)
        if np.max(np.minimum(np.abs(eigs), np.abs(eigs - 1.0))) > EIGENVALUE_TOL:
            raise DimensionMismatch("projector eigenvalues are not in {0, 1}")

    @property
    def ambient_dim(self) -> int:
        return self.matrix.shape[0]


def orthonormal_basis(rows, tol: float = DEFAULT_TOL) -> Subspace:
    """Orthonormal basis for the row span of ``rows``.

    Args:
        rows: n x d matrix; its row span defines the subspace.
        tol: relative rank threshold; singular values <= tol * sigma_max
            count as zero.

    Returns:
        Subspace of R^d with rank equal to the numerical rank of ``rows``.
    """
    mat = as_matrix(rows, "rows")
    if tol <= 0:
        raise ValueError("tol must be positive")
    d = mat.shape[1]
    if mat.shape[0] == 0:
        return Subspace(np.zeros((d, 0)))
    _, s, vh = np.linalg.svd(mat, full_matrices=False)
    rank = int(np.sum(s > tol * s[0])) if s.size else 0
    return Subspace(vh[:rank].T)


def projector_onto(s: Subspace) -> Projector:
    """The projector W W^T onto the span of ``s``."""
    return Projector(s.basis @ s.basis.T)


def null_projector(p: Projector) -> Projector:
    """The complementary projector I - P."""
    d = p.ambient_dim
    return Projector(np.eye(d) - p.matrix)


def complement_basis(s: Subspace) -> Subspace:
    """Orthonormal basis of the orthogonal complement of ``s``."""
    d, k = s.ambient_dim, s.rank
    if k == 0:
        return Subspace(np.eye(d))
    # Full SVD of the basis rows exposes the complement in the right factor.
    _, _, vh = np.linalg.svd(s.basis.T, full_matrices=True)
    return Subspace(vh[k:].T)


def principal_angles(a: Subspace, b: Subspace) -> np.ndarray:
    """Principal angles between two subspaces, in radians, ascending.

    Computed as arccos of the singular values of W_a^T W_b, clamped to
    [0, 1] to absorb roundoff. The result has min(rank a, rank b) entries,
    all in [0, pi/2].

    Raises:
        DimensionMismatch: if the ambient dimensions differ.
    """
    if a.ambient_dim != b.ambient_dim:
        raise DimensionMismatch(
            f"ambient dims differ: {a.ambient_dim} vs {b.ambient_dim}"
        )
    if a.rank == 0 or b.rank == 0:
        return np.zeros(0)
    cosines = np.linalg.svd(a.basis.T @ b.basis, compute_uv=False)
    cosines = np.clip(cosines, 0.0, 1.0)
    # Singular values come out descending, so arccos is already ascending.
    return np.arccos(cosines)


def op_norm(m) -> float:
    """Largest singular value (spectral norm); 0 for an empty matrix."""
    mat = as_matrix(m, "matrix")
    if mat.size == 0:
        return 0.0
    return float(np.linalg.svd(mat, compute_uv=False)[0])


def min_norm_solve(X, y, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Minimum-Euclidean-norm solution of the consistent system X w = y.

    Returns X^+ y computed through the shared SVD rank threshold; the
    result lies in the row span of X.

    Raises:
        InconsistentSystem: if ||X X^+ y - y|| > 1e-8 * ||y||, i.e. the
            system has no exact solution (a realizability violation). An
            absolute floor of 1e-12 * sigma_max(X) keeps labels that are
            zero up to rounding from being rejected.
    """
    mat = as_matrix(X, "X")
    rhs = as_vector(y, "y")
    if mat.shape[0] != rhs.shape[0]:
        raise DimensionMismatch(
            f"X has {mat.shape[0]} rows but y has {rhs.shape[0]} entries"
        )
    d = mat.shape[1]
    if mat.shape[0] == 0:
        return np.zeros(d)
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    rank = int(np.sum(s > tol * s[0])) if s.size else 0
    coeffs = u[:, :rank].T @ rhs / s[:rank] if rank else np.zeros(0)
    w = vh[:rank].T @ coeffs
    residual = np.linalg.norm(mat @ w - rhs)
    floor = 1e-12 * (float(s[0]) if s.size else 0.0)
    if residual > max(1e-8 * float(np.linalg.norm(rhs)), floor):
        raise InconsistentSystem(
            f"||Xw - y|| = {residual:.3e} exceeds consistency tolerance"
        )
    return w
