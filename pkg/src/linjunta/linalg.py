"""Dense matrix and subspace toolkit.

SVD, symmetric eigendecomposition, spectral truncation and truncated
pseudoinverses, Frobenius-nearest PSD projection, row orthonormalization,
subspace geometry (projectors, principal angles, nearest contained
subspace).  All functions are pure and operate on plain numpy arrays.

Conventions:
  - symmetric inputs are rejected when the relative asymmetry exceeds
    ``SYMMETRY_RTOL`` and silently symmetrized below it (Monte-Carlo built
    Gram matrices are nearly but not exactly symmetric);
  - eigenvalues within ``EIGENVALUE_TIE_TOL`` of a truncation threshold
    count as above it, so round-off cannot flip retention decisions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DegeneracyError, GeometryError, InputError, ParameterError

SYMMETRY_RTOL = 1e-8
EIGENVALUE_TIE_TOL = 1e-12


def _as_matrix(a) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.ndim != 2:
        raise InputError(f"expected a 2-d array, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise InputError(f"matrix dimensions must be positive, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError("matrix has non-finite entries")
    return arr


def require_symmetric(a, rtol: float = SYMMETRY_RTOL) -> np.ndarray:
    """Validate symmetry within `rtol` (relative Frobenius) and symmetrize."""
    arr = _as_matrix(a)
    if arr.shape[0] != arr.shape[1]:
        raise InputError(f"expected a square matrix, got {arr.shape}")
    scale = max(float(np.linalg.norm(arr)), 1e-300)
    asym = float(np.linalg.norm(arr - arr.T))
    if asym > rtol * scale:
        raise InputError(
            f"matrix asymmetry {asym:.3e} exceeds {rtol:.1e} * ||A||_F = {rtol * scale:.3e}"
        )
    return 0.5 * (arr + arr.T)


def svd(a):
    """Thin SVD ``A = U @ diag(D) @ V.T`` with D descending.

    Returns (U, D, V); U and V have orthonormal columns.
    """
    arr = _as_matrix(a)
    u, d, vt = np.linalg.svd(arr, full_matrices=False)
    return u, d, vt.T


@dataclass(frozen=True)
class SymmetricSpectrum:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, orthonormal

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T

    def selection(self, eta: float, tie_tol: float = EIGENVALUE_TIE_TOL) -> np.ndarray:
        """Boolean mask of eigenvalues >= eta (ties within tie_tol count)."""
        return self.eigenvalues >= eta - tie_tol


def symmetric_spectrum(a, rtol: float = SYMMETRY_RTOL) -> SymmetricSpectrum:
    sym = require_symmetric(a, rtol)
    vals, vecs = np.linalg.eigh(sym)
    order = np.argsort(vals)[::-1]
    return SymmetricSpectrum(vals[order], vecs[:, order])


def spectral_truncate(a, eta: float) -> np.ndarray:
    """Keep the eigenspaces of a symmetric matrix with eigenvalue >= eta."""
    spec = symmetric_spectrum(a)
    keep = spec.selection(eta)
    v = spec.eigenvectors[:, keep]
    return (v * spec.eigenvalues[keep]) @ v.T


def spectral_truncate_below(a, eta: float) -> np.ndarray:
    """Complementary part: eigenspaces with eigenvalue < eta."""
    spec = symmetric_spectrum(a)
    keep = ~spec.selection(eta)
    v = spec.eigenvectors[:, keep]
    return (v * spec.eigenvalues[keep]) @ v.T


def truncated_pseudoinverse(a, eta: float) -> np.ndarray:
    """Pseudoinverse of the eigenvalue->=eta part of a symmetric matrix."""
    if eta <= 0:
        raise ParameterError(f"truncation threshold must be positive, got {eta}")
    spec = symmetric_spectrum(a)
    keep = spec.selection(eta)
    v = spec.eigenvectors[:, keep]
    inv = 1.0 / spec.eigenvalues[keep]
    return (v * inv) @ v.T


def nearest_psd(a) -> np.ndarray:
    """Frobenius-nearest PSD matrix: symmetrize, then clip negative eigenvalues."""
    spec = symmetric_spectrum(a)
    clipped = np.clip(spec.eigenvalues, 0.0, None)
    v = spec.eigenvectors
    return (v * clipped) @ v.T


def orthonormalize_rows(x, tol: float = 1e-12):
    """Replace a full-row-rank matrix X by the nearest row-orthonormal Y.

    Y = U V^T from the thin SVD X = U D V^T; Y keeps the row span and
    satisfies ||X - Y||_F <= ||X X^T - I||_F.
    """
    arr = _as_matrix(x)
    m, n = arr.shape
    if m > n:
        raise InputError(f"expected m <= n, got shape {arr.shape}")
    u, d, v = svd(arr)
    if d[-1] <= tol:
        raise DegeneracyError("input rows are numerically rank deficient", float(d[-1]))
    return u @ v.T


@dataclass(frozen=True)
class Subspace:
    """A subspace of R^n given by an orthonormal column basis (possibly empty)."""

    ambient_dim: int
    basis: np.ndarray  # shape (n, d), orthonormal columns; d may be 0

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=float)
        if basis.ndim != 2 or basis.shape[0] != self.ambient_dim:
            raise InputError(
                f"basis shape {basis.shape} inconsistent with ambient dim {self.ambient_dim}"
            )
        if basis.shape[1] > 0:
            gram = basis.T @ basis
            if np.linalg.norm(gram - np.eye(basis.shape[1])) > 1e-8:
                raise InputError("basis columns are not orthonormal")
        object.__setattr__(self, "basis", basis)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def project(self, points: np.ndarray) -> np.ndarray:
        """Project row vectors onto the subspace."""
        if self.dim == 0:
            return np.zeros_like(points)
        return (points @ self.basis) @ self.basis.T

    def complement_project(self, points: np.ndarray) -> np.ndarray:
        return points - self.project(points)

    def orthonormal_complement(self) -> "Subspace":
        if self.dim == 0:
            return Subspace(self.ambient_dim, np.eye(self.ambient_dim))
        full = scipy.linalg.null_space(self.basis.T)
        return Subspace(self.ambient_dim, full)

    @staticmethod
    def trivial(ambient_dim: int) -> "Subspace":
        return Subspace(ambient_dim, np.zeros((ambient_dim, 0)))

    @staticmethod
    def from_span(vectors, tol: float = 1e-10) -> "Subspace":
        """Orthonormalize a set of row vectors into a subspace basis."""
        arr = np.atleast_2d(np.asarray(vectors, dtype=float))
        n = arr.shape[1]
        if not np.all(np.isfinite(arr)):
            raise InputError("span vectors have non-finite entries")
        u, d, _ = np.linalg.svd(arr.T, full_matrices=False)
        rank = int(np.sum(d > tol * max(1.0, d[0] if d.size else 1.0)))
        return Subspace(n, u[:, :rank])

    @staticmethod
    def coordinate(ambient_dim: int, axes) -> "Subspace":
        basis = np.zeros((ambient_dim, len(axes)))
        for j, axis in enumerate(axes):
            basis[axis, j] = 1.0
        return Subspace(ambient_dim, basis)


def principal_angles(a, b) -> np.ndarray:
    """Canonical angles (radians, ascending) between the spans of two bases.

    Accepts subspaces or matrices whose *columns* span the subspaces.
    """
    ba = a.basis if isinstance(a, Subspace) else Subspace.from_span(np.asarray(a).T).basis
    bb = b.basis if isinstance(b, Subspace) else Subspace.from_span(np.asarray(b).T).basis
    if ba.shape[1] == 0 or bb.shape[1] == 0:
        return np.array([])
    sigma = np.linalg.svd(ba.T @ bb, compute_uv=False)
    return np.arccos(np.clip(np.sort(sigma)[::-1], -1.0, 1.0))


def nearest_subspace_inside(e: Subspace, eprime: Subspace) -> Subspace:
    """The subspace of `eprime` with dim(e) closest to `e`.

    Built from the SVD of P_E P_E': the top dim(e) right singular vectors
    lie in `eprime` and span a subspace T with
    ||P_E - P_T||_F^2 <= 8 ||P_E P_{E'perp}||_F^2.
    Requires ||P_E P_{E'perp}||_2 < 1.
    """
    if e.ambient_dim != eprime.ambient_dim:
        raise InputError("subspaces live in different ambient dimensions")
    if e.dim == 0:
        return Subspace.trivial(e.ambient_dim)
    pe = e.projector()
    pep = eprime.projector()
    leak = float(np.linalg.norm(pe @ (np.eye(e.ambient_dim) - pep), ord=2))
    if leak >= 1.0:
        raise GeometryError(
            "subspaces are too far apart for a contained nearest subspace", leak
        )
    u, d, v = svd(pe @ pep)
    k = e.dim
    basis = v[:, :k]
    # The right singular vectors are in E' up to round-off; re-orthonormalize
    # after projecting back to be safe.
    basis = eprime.projector() @ basis
    q, _ = np.linalg.qr(basis)
    return Subspace(e.ambient_dim, q[:, :k])


def operator_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=float), ord=2))


def frobenius(a) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=float)))


def eigenband_subspace(a, low: float, high: float) -> Subspace:
    """Span of eigenvectors of a symmetric matrix with eigenvalues in [low, high]."""
    spec = symmetric_spectrum(a)
    keep = (spec.eigenvalues >= low) & (spec.eigenvalues <= high)
    return Subspace(a.shape[0], spec.eigenvectors[:, keep])


def eigenspace_at_least(a, eta: float) -> Subspace:
    """Span of eigenvectors with eigenvalue >= eta (tie-tolerant)."""
    spec = symmetric_spectrum(a)
    keep = spec.selection(eta)
    return Subspace(np.asarray(a).shape[0], spec.eigenvectors[:, keep])
