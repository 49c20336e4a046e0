"""Finite-dimensional algebras generated by matrices.

An algebra is stored as an orthonormal basis under the Hilbert-Schmidt
inner product ``<A, B> = trace(B* A)``.  Flattened row-major, that inner
product is ``numpy.vdot(B.ravel(), A.ravel())``, so the basis is an
orthonormal set of columns in ``C^(n*n)`` and membership is a least
squares residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import (
    DimensionMismatchError,
    IllConditionedError,
    NotApplicableError,
    ValidationError,
)
from .linalg_core import (
    DEFAULT_TOLERANCE,
    Tolerance,
    as_matrix,
    cluster_eigenvalues,
    cluster_labels,
    hermitian_eig,
    matrix_to_json,
    orthonormal_range,
    range_projection,
)
from .two_projections import (
    ProjectionMatrix,
    angle_c,
    spectral_gap_at_1,
)

__all__ = [
    "SpanAlgebra", "CenterReport", "AuditRow", "span_closure", "membership_residual",
    "unit_of", "center_of", "minimality_check", "extract_equivalent_minimals",
    "angle_audit",
]

# null-space threshold for the commutation system; true null vectors sit
# at rounding level, genuine commutators of unit-norm elements are O(1e-3)+
_NULL_REL = 1e-5


@dataclass(frozen=True)
class SpanAlgebra:
    """An algebra given by an HS-orthonormal basis.

    ``basis`` has shape ``(dim, n, n)``.
    """

    ambient_dim: int
    basis: np.ndarray
    generators: tuple

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def vectors(self) -> np.ndarray:
        """Basis as orthonormal columns of shape ``(n*n, dim)``."""
        return self.basis.reshape(self.dim, -1).T

    def coefficients(self, x) -> np.ndarray:
        return self.vectors.conj().T @ np.asarray(x).ravel()

    def element(self, coeffs) -> np.ndarray:
        return np.tensordot(np.asarray(coeffs), self.basis, axes=1)

    def to_json(self) -> dict:
        return {
            "ambient": self.ambient_dim,
            "dim": self.dim,
            "basis": [matrix_to_json(b) for b in self.basis],
        }


def _orthonormal_extension(q, cand, thresh, chunk=512):
    """New orthonormal directions of ``cand`` (columns) outside span(q).

    Candidates are handled in chunks: columns whose residual against the
    current span is already below ``thresh`` are dropped before the SVD,
    which keeps the decompositions small once the span saturates.
    Residuals are compared without renormalizing: products of
    orthonormal basis elements have Hilbert-Schmidt norm at most 1, and
    rescaling a roundoff-sized product would promote noise to a direction.
    """
    cand = cand[:, np.linalg.norm(cand, axis=0) > thresh]
    found = []
    for k in range(0, cand.shape[1], chunk):
        c = cand[:, k:k + chunk]
        basis = np.hstack([q] + found) if found else q
        for _ in range(2):
            if basis.shape[1]:
                c = c - basis @ (basis.conj().T @ c)
        c = c[:, np.linalg.norm(c, axis=0) > thresh]
        if c.shape[1] == 0:
            continue
        u, s, _ = np.linalg.svd(c, full_matrices=False)
        new = u[:, s > thresh]
        if basis.shape[1] and new.shape[1]:
            new = new - basis @ (basis.conj().T @ new)
            new, _ = np.linalg.qr(new)
        if new.shape[1]:
            found.append(new)
    if not found:
        return np.zeros((cand.shape[0], 0), dtype=np.complex128)
    return np.hstack(found)


def _spectral_candidates(q, n, rng, tol):
    """Spectral projections of a generic Hermitian element of span(q).

    The span lies inside a ``*``-algebra, so these projections belong to
    it.  They separate nearly equal blocks with well-conditioned
    directions, which pure products only reach through rapidly shrinking
    residuals.
    """
    B = q.T.reshape(-1, n, n)
    a = rng.standard_normal(len(B)) + 1j * rng.standard_normal(len(B))
    x = np.tensordot(a, B, axes=1)
    w, v = np.linalg.eigh(0.5 * (x + x.conj().T))
    labels = cluster_labels(w[::-1], tol.cluster_tol)[::-1]
    out = []
    for lab in np.unique(labels):
        sel = labels == lab
        if abs(w[sel].mean()) > tol.cluster_tol:
            vs = v[:, sel]
            out.append((vs @ vs.conj().T).ravel())
    return out


def span_closure(generators, tol: Tolerance = DEFAULT_TOLERANCE,
                 adjoint: bool = True) -> SpanAlgebra:
    """Smallest product-closed (and, by default, ``*``-closed) span.

    Starts from the generators (and their adjoints), then repeatedly
    adds the products of every new basis element with every basis
    element on both sides until no direction survives orthogonalization
    above ``cluster_tol``.  For ``*``-closures each round also offers the
    spectral projections of a generic Hermitian element of the current
    span (fixed internal seed, so results are reproducible).  The
    dimension is bounded by ``n*n``, so the loop terminates.
    """
    gens = [as_matrix(g, "generator") for g in generators]
    if not gens:
        raise ValidationError("span_closure needs at least one generator")
    shapes = {g.shape for g in gens}
    if len(shapes) != 1 or gens[0].shape[0] != gens[0].shape[1]:
        raise DimensionMismatchError(f"generators must be square of equal size, got {sorted(shapes)}")
    n = gens[0].shape[0]
    thresh = tol.cluster_tol
    rng = np.random.default_rng(0)

    start = gens + ([g.conj().T for g in gens] if adjoint else [])
    start = [g.ravel() / np.linalg.norm(g) for g in start if np.linalg.norm(g) > 0]
    q = np.zeros((n * n, 0), dtype=np.complex128)
    if not start:
        frontier = q
    else:
        frontier = _orthonormal_extension(q, np.stack(start, axis=1), thresh)
    q = frontier
    while frontier.shape[1]:
        B = q.T.reshape(-1, n, n)
        F = frontier.T.reshape(-1, n, n)
        left = np.matmul(F[:, None], B[None, :]).reshape(-1, n * n)
        right = np.matmul(B[:, None], F[None, :]).reshape(-1, n * n)
        cand = [left, right]
        if adjoint:
            spec = _spectral_candidates(q, n, rng, tol)
            if spec:
                cand.insert(0, np.stack(spec))
        frontier = _orthonormal_extension(q, np.concatenate(cand).T, thresh)
        q = np.hstack([q, frontier])
        if q.shape[1] > n * n:
            raise IllConditionedError("closure exceeded n^2 directions; rank decisions unstable")
    basis = q.T.reshape(-1, n, n).copy()
    basis.setflags(write=False)
    return SpanAlgebra(n, basis, tuple(gens))


def _check_dim(alg, x):
    x = as_matrix(x)
    if x.shape != (alg.ambient_dim, alg.ambient_dim):
        raise DimensionMismatchError(
            f"expected {alg.ambient_dim}x{alg.ambient_dim} matrix, got {x.shape}")
    return x


def membership_residual(alg: SpanAlgebra, x) -> float:
    """Hilbert-Schmidt distance from ``x`` to the span of the basis."""
    x = _check_dim(alg, np.asarray(x))
    v = x.ravel()
    if alg.dim == 0:
        return float(np.linalg.norm(v))
    qv = alg.vectors
    return float(np.linalg.norm(v - qv @ (qv.conj().T @ v)))


def unit_of(alg: SpanAlgebra, tol: Tolerance = DEFAULT_TOLERANCE) -> ProjectionMatrix | None:
    """The projection ``u`` with ``ux = xu = x`` on the algebra, if it exists.

    For a ``*``-algebra the unit is the projection onto the sum of the
    ranges of its elements; that candidate is built and then checked
    (two-sided identity and membership, both at ``membership_tol``).
    Returns ``None`` when the check fails.
    """
    n, d = alg.ambient_dim, alg.dim
    if d == 0:
        return ProjectionMatrix.zeros(n)
    B = alg.basis
    u = range_projection(np.concatenate(list(B), axis=1), tol)
    err = max(np.linalg.norm(np.matmul(u, B) - B, axis=(1, 2)).max(),
              np.linalg.norm(np.matmul(B, u) - B, axis=(1, 2)).max())
    if err > tol.membership_tol or membership_residual(alg, u) > tol.membership_tol:
        return None
    return ProjectionMatrix(u, tol)


@dataclass(frozen=True)
class CenterReport:
    """Center of a unital algebra and its minimal central projections.

    ``block_dims[k]`` is the matrix size ``d`` with ``z_k A`` of dimension
    ``d^2``; ``central_ranks[k]`` is the rank of ``z_k`` in the ambient space.
    """

    center_basis: list
    central_projections: list
    block_dims: list
    central_ranks: list

    @property
    def dim(self) -> int:
        return len(self.center_basis)

    def to_json(self) -> dict:
        return {
            "center_dim": self.dim,
            "block_dims": list(self.block_dims),
            "central_ranks": list(self.central_ranks),
            "central_projections": [matrix_to_json(z.matrix) for z in self.central_projections],
        }


def _span_rank(mats, thresh):
    if len(mats) == 0:
        return 0
    m = np.stack([np.asarray(x).ravel() for x in mats], axis=1)
    s = np.linalg.svd(m, compute_uv=False)
    return int((s > thresh).sum())


def _commutant_coeffs(alg, others):
    """Coefficient vectors of algebra elements commuting with ``others``."""
    B = alg.basis
    O = np.asarray(others)
    comm = np.matmul(B[:, None], O[None, :]) - np.matmul(O[None, :], B[:, None])
    L = comm.reshape(alg.dim, -1).T
    _, s, vh = np.linalg.svd(L, full_matrices=False)
    scale = max(1.0, s[0]) if s.size else 1.0
    null = np.ones(alg.dim, dtype=bool)
    null[: s.size] = s <= _NULL_REL * scale
    return vh.conj().T[:, null]


def _hermitian_parts(mats):
    out = []
    for m in mats:
        out.append(0.5 * (m + m.conj().T))
        out.append(0.5j * (m.conj().T - m))
    return out


def center_of(alg: SpanAlgebra, tol: Tolerance = DEFAULT_TOLERANCE,
              rng: np.random.Generator | None = None, retries: int = 10) -> CenterReport:
    """Center, minimal central projections and block sizes.

    The center is the null space of ``x -> [x, b_i]`` over the basis.  Its
    minimal projections are the spectral projections (restricted to the
    unit's range) of a random self-adjoint central element; a draw that
    fails to separate all blocks is retried.
    """
    unit = unit_of(alg, tol)
    if unit is None:
        raise NotApplicableError("center_of requires a unital algebra")
    if alg.dim == 0:
        return CenterReport([], [], [], [])
    rng = np.random.default_rng(0) if rng is None else rng

    coeffs = _commutant_coeffs(alg, alg.basis)
    center = [alg.element(c) for c in coeffs.T]
    k = len(center)
    herm = _hermitian_parts(center)
    w = orthonormal_range(unit.matrix)

    for _ in range(retries):
        h = sum(rng.standard_normal() * x for x in herm)
        hw = w.conj().T @ h @ w
        s = hermitian_eig(0.5 * (hw + hw.conj().T), tol)
        labels = cluster_labels(s.eigenvalues, tol.cluster_tol)
        if labels.max() + 1 == k:
            break
    else:
        raise IllConditionedError(
            f"random central element failed to separate {k} blocks in {retries} draws")

    projections = []
    for lab in range(k):
        v = w @ s.eigenvectors[:, labels == lab]
        z = v @ v.conj().T
        projections.append(ProjectionMatrix(0.5 * (z + z.conj().T), tol))

    thresh = math.sqrt(tol.eq_tol)
    info = []
    for z in projections:
        block_dim = _span_rank([z.matrix @ b for b in alg.basis], thresh)
        d = int(round(math.sqrt(block_dim)))
        diag = np.real(np.diagonal(z.matrix))
        info.append((-d, int(np.argmax(diag > 0.5)), z, d))
    info.sort(key=lambda r: r[:2])
    return CenterReport(
        center_basis=center,
        central_projections=[r[2] for r in info],
        block_dims=[r[3] for r in info],
        central_ranks=[r[2].rank for r in info],
    )


def _require_member(alg, x, tol, name):
    res = membership_residual(alg, x)
    if res > tol.membership_tol:
        raise ValidationError(f"{name} is not in the algebra (residual {res:.3e})")


def minimality_check(alg: SpanAlgebra, f, tol: Tolerance = DEFAULT_TOLERANCE) -> bool:
    """True iff ``f A f`` is one-dimensional (so ``f A f = C f``)."""
    f = ProjectionMatrix.coerce(f, tol)
    _require_member(alg, f.matrix, tol, "projection")
    F = f.matrix
    return _span_rank([F @ b @ F for b in alg.basis], math.sqrt(tol.eq_tol)) == 1


def _projection_candidates(alg, tol):
    for g in alg.generators:
        try:
            yield ProjectionMatrix(g, tol).matrix
        except ValidationError:
            continue
    for h in _hermitian_parts(list(alg.basis)):
        s = hermitian_eig(h, tol)
        labels = cluster_labels(s.eigenvalues, tol.cluster_tol)
        for lab in range(labels.max() + 1):
            sel = labels == lab
            # the kernel projection is not a polynomial without constant term
            if abs(s.eigenvalues[sel].mean()) <= tol.cluster_tol:
                continue
            v = s.eigenvectors[:, sel]
            yield v @ v.conj().T


def _minimal_below(alg, e0, tol, rng, max_steps=64):
    cur = e0
    thresh = math.sqrt(tol.eq_tol)
    for _ in range(max_steps):
        comp = [cur @ b @ cur for b in alg.basis]
        if _span_rank(comp, thresh) <= 1:
            return cur
        w = orthonormal_range(cur)
        h = sum(rng.standard_normal() * x for x in _hermitian_parts(comp))
        hw = w.conj().T @ h @ w
        s = hermitian_eig(0.5 * (hw + hw.conj().T), tol)
        labels = cluster_labels(s.eigenvalues, tol.cluster_tol)
        if labels.max() == 0:
            continue
        v = w @ s.eigenvectors[:, labels == 0]
        cur = v @ v.conj().T
    raise IllConditionedError("failed to isolate a minimal subprojection")


def extract_equivalent_minimals(alg: SpanAlgebra, p, tol: Tolerance = DEFAULT_TOLERANCE,
                                rng: np.random.Generator | None = None):
    """Minimal ``e <= p``, ``f <= 1 - p`` and a partial isometry between them.

    Finds a projection ``r`` of the algebra with ``p r p'`` nonzero, takes
    the partial isometry ``v`` of its polar decomposition, shrinks
    ``v v*`` to a minimal subprojection ``e`` and sets ``f = v* e v``.

    Returns
    -------
    (e, f, w) with ``w w* = e`` and ``w* w = f``, or ``None`` when ``p``
    is zero or central.
    """
    p = ProjectionMatrix.coerce(p, tol)
    _require_member(alg, p.matrix, tol, "p")
    P = p.matrix
    n = alg.ambient_dim
    if p.rank == 0:
        return None
    comm = max((np.linalg.norm(P @ b - b @ P, 2) for b in alg.basis), default=0.0)
    if comm <= math.sqrt(tol.eq_tol):
        return None
    rng = np.random.default_rng(0) if rng is None else rng
    Pc = np.eye(n) - P
    for r in _projection_candidates(alg, tol):
        x = P @ r @ Pc
        u, s, vh = np.linalg.svd(x)
        keep = s > tol.cluster_tol
        if not keep.any():
            continue
        v = u[:, keep] @ vh[keep]
        e0 = v @ v.conj().T
        e = _minimal_below(alg, 0.5 * (e0 + e0.conj().T), tol, rng)
        f = v.conj().T @ e @ v
        w = e @ v
        return (ProjectionMatrix(0.5 * (e + e.conj().T), tol),
                ProjectionMatrix(0.5 * (f + f.conj().T), tol), w)
    raise IllConditionedError("p is not central but no projection moves it above cluster_tol")


@dataclass(frozen=True)
class AuditRow:
    i: int
    j: int
    c_value: float
    spec_cardinality: int
    spectral_gap_at_1: float
    degenerate: bool

    def to_json(self) -> dict:
        return dict(self.__dict__)


def angle_audit(projections, tol: Tolerance = DEFAULT_TOLERANCE) -> list[AuditRow]:
    """Angle and clustered ``spec(p_i p_j p_i)`` size for every unordered pair."""
    ps = [ProjectionMatrix.coerce(p, tol) for p in projections]
    if len({p.dim for p in ps}) > 1:
        raise DimensionMismatchError(f"dimension mismatch: {sorted({p.dim for p in ps})}")
    rows = []
    for i, j in combinations(range(len(ps)), 2):
        a, b = ps[i].matrix, ps[j].matrix
        m = a @ b @ a
        card = len(cluster_eigenvalues(hermitian_eig(0.5 * (m + m.conj().T), tol), tol.cluster_tol))
        gap = spectral_gap_at_1(ps[i], ps[j], tol)
        rows.append(AuditRow(i, j, angle_c(ps[i], ps[j], tol), card, gap, gap < tol.cluster_tol))
    return rows
