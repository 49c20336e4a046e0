"""Dense complex matrix helpers, Hermitian spectra and the tolerance policy.

Every matrix in the package is a 2-D ``numpy.ndarray`` of dtype
``complex128``.  :func:`as_matrix` is the single entry point that
validates shape and finiteness.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyInputError,
    MatrixFormatError,
    NotHermitianError,
    ValidationError,
)

__all__ = [
    "Tolerance", "DEFAULT_TOLERANCE", "HermitianSpectrum", "Cluster",
    "as_matrix", "op_norm", "hermitian_eig", "cluster_eigenvalues",
    "spectral_projection", "hermitian_function", "range_projection",
    "direct_sum", "random_unitary", "random_projection",
    "matrix_to_json", "matrix_from_json", "adjoint", "same_dim",
]


@dataclass(frozen=True)
class Tolerance:
    """Numerical thresholds shared by all operations.

    Parameters
    ----------
    eq_tol : float
        Entrywise / spectral equality threshold.
    cluster_tol : float
        Eigenvalue clustering radius; also the margin used when a value
        is compared against 0 or 1.
    iter_max : int
        Cap for iterative diagnostics.
    """

    eq_tol: float = 1e-10
    cluster_tol: float = 1e-6
    iter_max: int = 10_000

    def __post_init__(self):
        if not (0.0 < self.eq_tol < self.cluster_tol < 1.0):
            raise ValidationError(
                f"tolerances must satisfy 0 < eq_tol < cluster_tol < 1, "
                f"got eq_tol={self.eq_tol}, cluster_tol={self.cluster_tol}")
        if int(self.iter_max) != self.iter_max or self.iter_max < 1:
            raise ValidationError(f"iter_max must be a positive integer, got {self.iter_max}")

    @property
    def membership_tol(self) -> float:
        """Residual below which a matrix counts as a member of a span."""
        return 100.0 * self.eq_tol


DEFAULT_TOLERANCE = Tolerance()


class Cluster(NamedTuple):
    representative: float
    multiplicity: int


@dataclass(frozen=True)
class HermitianSpectrum:
    """Eigenvalues sorted descending with the matching unitary eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Return ``m`` as a finite, non-empty 2-D complex array."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got shape {a.shape}")
    if a.size == 0:
        raise EmptyInputError(f"{name} has zero dimension {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    return a


def adjoint(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def same_dim(*mats) -> int:
    """Common dimension of square matrices; raises on mismatch."""
    shapes = {np.shape(m) for m in mats}
    if len(shapes) != 1:
        raise DimensionMismatchError(f"dimension mismatch: {sorted(shapes)}")
    (shape,) = shapes
    if len(shape) != 2 or shape[0] != shape[1]:
        raise DimensionMismatchError(f"expected square matrices, got {shape}")
    return shape[0]


def op_norm(m) -> float:
    """Operator (spectral) norm: the largest singular value."""
    a = as_matrix(m)
    return float(np.linalg.norm(a, 2))


def hermitian_eig(m, tol: Tolerance = DEFAULT_TOLERANCE) -> HermitianSpectrum:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    Raises
    ------
    NotHermitianError
        If ``||m - m*|| > eq_tol * max(1, ||m||)``.
    """
    a = as_matrix(m)
    same_dim(a)
    asym = float(np.linalg.norm(a - a.conj().T, 2))
    scale = max(1.0, float(np.linalg.norm(a, 2)))
    if asym > tol.eq_tol * scale:
        raise NotHermitianError(f"matrix is not Hermitian: ||m - m*|| = {asym:.3e}", asym)
    w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
    return HermitianSpectrum(w[::-1].copy(), v[:, ::-1].copy())


def cluster_eigenvalues(spectrum, radius: float) -> list[Cluster]:
    """Single-linkage clusters of eigenvalues, in descending order.

    Consecutive sorted values closer than ``radius`` share a cluster.
    ``spectrum`` may be a :class:`HermitianSpectrum` or a plain sequence.
    """
    if not radius > 0:
        raise ValidationError(f"radius must be positive, got {radius}")
    vals = spectrum.eigenvalues if isinstance(spectrum, HermitianSpectrum) else spectrum
    vals = np.sort(np.asarray(vals, dtype=float).ravel())[::-1]
    clusters: list[Cluster] = []
    start = 0
    for i in range(1, len(vals) + 1):
        if i == len(vals) or vals[i - 1] - vals[i] > radius:
            chunk = vals[start:i]
            clusters.append(Cluster(float(chunk.mean()), len(chunk)))
            start = i
    return clusters


def cluster_labels(values: np.ndarray, radius: float) -> np.ndarray:
    """Cluster index for each entry of a descending-sorted array."""
    labels = np.zeros(len(values), dtype=int)
    for i in range(1, len(values)):
        labels[i] = labels[i - 1] + (values[i - 1] - values[i] > radius)
    return labels


def spectral_projection(spectrum: HermitianSpectrum, mask) -> np.ndarray:
    """Projection onto the eigenvectors selected by a boolean mask."""
    v = spectrum.eigenvectors[:, np.asarray(mask, dtype=bool)]
    p = v @ v.conj().T
    return 0.5 * (p + p.conj().T)


def hermitian_function(m, fn: Callable[[np.ndarray], np.ndarray],
                       tol: Tolerance = DEFAULT_TOLERANCE) -> np.ndarray:
    """Functional calculus ``fn(m)`` for Hermitian ``m``."""
    s = hermitian_eig(m, tol)
    v = s.eigenvectors
    return (v * fn(s.eigenvalues)) @ v.conj().T


def range_projection(m, tol: Tolerance = DEFAULT_TOLERANCE) -> np.ndarray:
    """Orthogonal projection onto the column space of ``m``."""
    a = as_matrix(m)
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((a.shape[0], a.shape[0]), dtype=np.complex128)
    keep = s > tol.eq_tol * max(1.0, s[0])
    w = u[:, keep]
    return w @ w.conj().T


def orthonormal_range(p: np.ndarray) -> np.ndarray:
    """Orthonormal basis (as columns) of the range of a projection."""
    w, v = np.linalg.eigh(0.5 * (p + p.conj().T))
    return v[:, w > 0.5][:, ::-1]


def direct_sum(*mats) -> np.ndarray:
    """Block-diagonal matrix from square blocks."""
    blocks = [np.atleast_2d(np.asarray(m, dtype=np.complex128)) for m in mats]
    n = sum(b.shape[0] for b in blocks)
    out = np.zeros((n, n), dtype=np.complex128)
    i = 0
    for b in blocks:
        k = b.shape[0]
        out[i:i + k, i:i + k] = b
        i += k
    return out


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-distributed unitary via QR with phase correction."""
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_projection(rng: np.random.Generator, n: int, rank: int | None = None) -> np.ndarray:
    """Uniformly oriented projection of the given (or random) rank."""
    if rank is None:
        rank = int(rng.integers(0, n + 1))
    if not 0 <= rank <= n:
        raise ValidationError(f"rank {rank} outside [0, {n}]")
    w = random_unitary(rng, n)[:, :rank]
    p = w @ w.conj().T
    return 0.5 * (p + p.conj().T)


def random_hermitian(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (z + z.conj().T)


# -- JSON ------------------------------------------------------------------

def matrix_to_json(m) -> dict:
    a = np.asarray(m, dtype=np.complex128)
    rows, cols = a.shape
    return {
        "rows": int(rows),
        "cols": int(cols),
        "data": [[float(z.real), float(z.imag)] for z in a.ravel()],
    }


def matrix_from_json(doc) -> np.ndarray:
    """Parse ``{"rows": r, "cols": c, "data": [[re, im], ...]}`` (row-major)."""
    if not isinstance(doc, dict):
        raise MatrixFormatError("matrix document must be a JSON object")
    try:
        rows, cols, data = doc["rows"], doc["cols"], doc["data"]
    except KeyError as exc:
        raise MatrixFormatError(f"matrix document missing key {exc}") from None
    if not (isinstance(rows, int) and isinstance(cols, int)) or rows < 1 or cols < 1:
        raise MatrixFormatError(f"rows/cols must be positive integers, got {rows!r}, {cols!r}")
    if not isinstance(data, list) or len(data) != rows * cols:
        got = len(data) if isinstance(data, list) else type(data).__name__
        raise MatrixFormatError(f"data must hold rows*cols = {rows * cols} entries, got {got}")
    try:
        arr = np.array(data, dtype=float)
    except (TypeError, ValueError):
        raise MatrixFormatError("data entries must be [re, im] number pairs") from None
    if arr.shape != (rows * cols, 2):
        raise MatrixFormatError("data entries must be [re, im] pairs")
    return as_matrix((arr[:, 0] + 1j * arr[:, 1]).reshape(rows, cols))


def stack_vectors(mats: Sequence[np.ndarray]) -> np.ndarray:
    """Columns are the row-major flattenings of the given matrices."""
    return np.stack([np.asarray(m).ravel() for m in mats], axis=1)
