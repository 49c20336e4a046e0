"""Geometry of a pair of projections.

Meets and joins, the angle invariant ``c(p, q) = ||(p - p^q)(q - p^q)||``,
the Halmos canonical form of a pair, a battery of diagnostics around the
convergence of ``(pqp)^n``, and two explicit constructions of pairs whose
angle approaches 1.

Meets are spectral projections of ``pqp`` at the eigenvalue cluster near
1 (radius ``cluster_tol``); the iteration ``(pqp)^n`` is kept only as a
diagnostic since it converges slowly exactly when the angle is small.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    IllConditionedError,
    NotApplicableError,
    NotAProjectionError,
    ValidationError,
)
from .linalg_core import (
    DEFAULT_TOLERANCE,
    Cluster,
    Tolerance,
    as_matrix,
    cluster_labels,
    hermitian_eig,
    matrix_from_json,
    matrix_to_json,
    op_norm,
    orthonormal_range,
    same_dim,
    spectral_projection,
)

__all__ = [
    "ProjectionMatrix", "TwoProjectionForm", "EquivalenceReport", "CounterexampleReport",
    "meet", "join", "angle_c", "canonical_form", "reconstruct_pair",
    "equivalence_battery", "bad_pair_from_spectrum", "ramp_profile",
    "truncated_counterexample", "planar_pair", "spectral_gap_at_1",
]


def _residual(r, tol):
    # the Frobenius norm bounds the operator norm; take the SVD only if needed
    fro = float(np.linalg.norm(r))
    return fro if fro <= tol else float(np.linalg.norm(r, 2))


class ProjectionMatrix:
    """A validated Hermitian idempotent.

    The wrapped array is read-only.  Pass ``check=False`` only for
    matrices constructed as ``V V*`` from orthonormal columns.
    """

    __slots__ = ("matrix",)

    def __init__(self, matrix, tol: Tolerance = DEFAULT_TOLERANCE, check: bool = True):
        m = np.array(as_matrix(matrix, "projection"), copy=True)
        if check:
            if m.shape[0] != m.shape[1]:
                raise ValidationError(f"projection must be square, got {m.shape}")
            herm = _residual(m - m.conj().T, tol.eq_tol)
            idem = _residual(m @ m - m, tol.eq_tol)
            if herm > tol.eq_tol or idem > tol.eq_tol:
                raise NotAProjectionError(
                    f"not a projection: ||P - P*|| = {herm:.3e}, ||P^2 - P|| = {idem:.3e}",
                    herm, idem)
        m.setflags(write=False)
        self.matrix = m

    @classmethod
    def coerce(cls, x, tol: Tolerance = DEFAULT_TOLERANCE) -> "ProjectionMatrix":
        return x if isinstance(x, cls) else cls(x, tol)

    @classmethod
    def zeros(cls, n: int) -> "ProjectionMatrix":
        return cls(np.zeros((n, n)), check=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def rank(self) -> int:
        return int(round(float(np.trace(self.matrix).real)))

    def complement(self) -> "ProjectionMatrix":
        return ProjectionMatrix(np.eye(self.dim) - self.matrix, check=False)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    def __repr__(self):
        return f"ProjectionMatrix(dim={self.dim}, rank={self.rank})"


def _pair(p, q, tol):
    p = ProjectionMatrix.coerce(p, tol)
    q = ProjectionMatrix.coerce(q, tol)
    same_dim(p.matrix, q.matrix)
    return p, q


def _compress(p, q):
    P, Q = p.matrix, q.matrix
    m = P @ Q @ P
    return 0.5 * (m + m.conj().T)


def meet(p, q, tol: Tolerance = DEFAULT_TOLERANCE) -> ProjectionMatrix:
    """Projection onto ``range(p) & range(q)``.

    Computed as the spectral projection of ``pqp`` for eigenvalues within
    ``cluster_tol`` of 1, which is the norm limit of ``(pqp)^n``.
    """
    p, q = _pair(p, q, tol)
    s = hermitian_eig(_compress(p, q), tol)
    return ProjectionMatrix(spectral_projection(s, s.eigenvalues >= 1.0 - tol.cluster_tol), check=False)


def join(p, q, tol: Tolerance = DEFAULT_TOLERANCE) -> ProjectionMatrix:
    """Projection onto ``range(p) + range(q)``, as ``1 - meet(1-p, 1-q)``."""
    p, q = _pair(p, q, tol)
    return meet(p.complement(), q.complement(), tol).complement()


def angle_c(p, q, tol: Tolerance = DEFAULT_TOLERANCE) -> float:
    """The angle invariant ``||(p - e)(q - e)||`` with ``e = p ^ q``.

    Equals the cosine of the smallest nonzero principal angle between
    the ranges once their intersection is removed.
    """
    p, q = _pair(p, q, tol)
    e = meet(p, q, tol).matrix
    return min(1.0, op_norm((p.matrix - e) @ (q.matrix - e)))


def spectral_gap_at_1(p, q, tol: Tolerance = DEFAULT_TOLERANCE) -> float:
    """Distance from 1 to the largest eigenvalue of ``pqp`` that is not 1.

    Eigenvalues within ``eq_tol`` of 1 count as 1.  A result below
    ``cluster_tol`` means :func:`meet` absorbed eigenvalues that are not
    numerically 1, i.e. the pair sits at the ``c < 1`` / ``c = 1``
    boundary.  Returns 1.0 when every eigenvalue is 0 or 1 up to that
    threshold.
    """
    p, q = _pair(p, q, tol)
    w = hermitian_eig(_compress(p, q), tol).eigenvalues
    below = w[w < 1.0 - tol.eq_tol]
    return float(1.0 - below.max()) if below.size else 1.0


def planar_pair(theta: float) -> tuple[ProjectionMatrix, ProjectionMatrix]:
    """``p = diag(1, 0)`` and ``q`` the line at angle ``theta`` from it."""
    c, s = math.cos(theta), math.sin(theta)
    p = np.array([[1.0, 0.0], [0.0, 0.0]])
    q = np.array([[c * c, c * s], [c * s, s * s]])
    return ProjectionMatrix(p), ProjectionMatrix(q)


# -- canonical form ----------------------------------------------------------

@dataclass(frozen=True)
class TwoProjectionForm:
    """Halmos decomposition of a pair ``(p, q)``.

    Columns of ``unitary`` are ordered as: ``p^q``, ``p^q'``, ``p'^q``,
    ``p'^q'`` corners (sizes in ``dims``), then one contiguous ``(x, y)``
    column pair per generic 2x2 block, blocks following ``generic``.
    On a generic block with parameter ``t`` (an eigenvalue of ``pqp``)
    ``p = [[1, 0], [0, 0]]`` and ``q = [[t, r], [r, 1 - t]]`` with
    ``r = sqrt(t (1 - t))``.
    """

    unitary: np.ndarray
    dims: tuple[int, int, int, int]
    generic: tuple[Cluster, ...] = field(default_factory=tuple)

    @property
    def dim_meet(self) -> int:
        return self.dims[0]

    @property
    def dim_p_only(self) -> int:
        return self.dims[1]

    @property
    def dim_q_only(self) -> int:
        return self.dims[2]

    @property
    def dim_neither(self) -> int:
        return self.dims[3]

    @property
    def generic_params(self) -> list[float]:
        return [c.representative for c in self.generic]

    @property
    def generic_multiplicity(self) -> int:
        return sum(c.multiplicity for c in self.generic)

    @property
    def ambient_dim(self) -> int:
        return sum(self.dims) + 2 * self.generic_multiplicity

    @classmethod
    def standard(cls, dims, generic=()) -> "TwoProjectionForm":
        """A form in the standard basis (identity unitary)."""
        generic = tuple(Cluster(float(t), int(m)) for t, m in generic)
        n = sum(dims) + 2 * sum(c.multiplicity for c in generic)
        if n < 1:
            raise ValidationError("canonical form must have positive ambient dimension")
        return cls(np.eye(n, dtype=np.complex128), tuple(int(d) for d in dims), generic)

    def to_json(self) -> dict:
        return {
            "unitary": matrix_to_json(self.unitary),
            "dims": list(self.dims),
            "generic": [[c.representative, c.multiplicity] for c in self.generic],
        }

    @classmethod
    def from_json(cls, doc) -> "TwoProjectionForm":
        try:
            u = matrix_from_json(doc["unitary"])
            dims = tuple(int(d) for d in doc["dims"])
            generic = tuple(Cluster(float(t), int(m)) for t, m in doc["generic"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed canonical form document: {exc}") from None
        return cls(u, dims, generic)


def _generic_blocks(ts):
    ps, qs = [], []
    for t in ts:
        r = math.sqrt(max(t * (1.0 - t), 0.0))
        ps.append(np.array([[1.0, 0.0], [0.0, 0.0]]))
        qs.append(np.array([[t, r], [r, 1.0 - t]]))
    return ps, qs


def canonical_form(p, q, tol: Tolerance = DEFAULT_TOLERANCE) -> TwoProjectionForm:
    """Simultaneous block decomposition of a pair of projections.

    Eigenvalues of ``pqp`` on ``range(p)`` within ``cluster_tol`` of 1 or 0
    are assigned to the ``p^q`` and ``p^q'`` corners; the rest form the
    generic part.  Generic parameters that agree to ``eq_tol`` are merged.
    """
    p, q = _pair(p, q, tol)
    n = p.dim
    P, Q = p.matrix, q.matrix
    ct = tol.cluster_tol

    bp = orthonormal_range(P)
    bn = orthonormal_range(np.eye(n) - P)

    def split(basis):
        if basis.shape[1] == 0:
            return np.zeros(0), basis
        a = basis.conj().T @ Q @ basis
        w, v = np.linalg.eigh(0.5 * (a + a.conj().T))
        return w[::-1], basis @ v[:, ::-1]

    t, xs = split(bp)
    u, ys = split(bn)
    top_p, gen_p, bot_p = t >= 1 - ct, (t > ct) & (t < 1 - ct), t <= ct
    top_n, gen_n, bot_n = u >= 1 - ct, (u > ct) & (u < 1 - ct), u <= ct
    if gen_p.sum() != gen_n.sum():
        raise IllConditionedError(
            "generic part of range(p) and range(1-p) disagree in size; "
            "an eigenvalue of pqp sits on a guard band edge")

    tg = t[gen_p]
    xg = xs[:, gen_p]
    yg = (np.eye(n) - P) @ Q @ xg
    if yg.shape[1]:
        yg = yg / np.linalg.norm(yg, axis=0)
    labels = cluster_labels(tg, tol.eq_tol)
    generic = tuple(Cluster(float(tg[labels == k].mean()), int((labels == k).sum()))
                    for k in range(labels.max() + 1)) if tg.size else ()

    pairs = np.empty((n, 2 * tg.size), dtype=np.complex128)
    pairs[:, 0::2] = xg
    pairs[:, 1::2] = yg
    unitary = np.hstack([xs[:, top_p], xs[:, bot_p], ys[:, top_n], ys[:, bot_n], pairs])
    dims = (int(top_p.sum()), int(bot_p.sum()), int(top_n.sum()), int(bot_n.sum()))
    return TwoProjectionForm(unitary, dims, generic)


def reconstruct_pair(form: TwoProjectionForm) -> tuple[ProjectionMatrix, ProjectionMatrix]:
    """Inverse of :func:`canonical_form`."""
    n = form.ambient_dim
    if n < 1:
        raise ValidationError("canonical form must have positive ambient dimension")
    u = np.asarray(form.unitary, dtype=np.complex128)
    if u.shape != (n, n):
        raise ValidationError(
            f"block dimensions {form.dims} + 2 x {form.generic_multiplicity} generic "
            f"do not match unitary of shape {u.shape}")
    for c in form.generic:
        if not 0.0 < c.representative < 1.0 or c.multiplicity < 1:
            raise ValidationError(f"invalid generic parameter {c}")
    m, a, b, z = form.dims
    pd = [np.ones(m), np.ones(a), np.zeros(b), np.zeros(z)]
    qd = [np.ones(m), np.zeros(a), np.ones(b), np.zeros(z)]
    p0 = np.zeros((n, n), dtype=np.complex128)
    q0 = np.zeros((n, n), dtype=np.complex128)
    k = m + a + b + z
    p0[:k, :k] = np.diag(np.concatenate(pd))
    q0[:k, :k] = np.diag(np.concatenate(qd))
    ts = [c.representative for c in form.generic for _ in range(c.multiplicity)]
    for pb, qb in zip(*_generic_blocks(ts)):
        p0[k:k + 2, k:k + 2] = pb
        q0[k:k + 2, k:k + 2] = qb
        k += 2
    P = u @ p0 @ u.conj().T
    Q = u @ q0 @ u.conj().T
    return (ProjectionMatrix(0.5 * (P + P.conj().T)),
            ProjectionMatrix(0.5 * (Q + Q.conj().T)))


# -- equivalence battery -----------------------------------------------------

@dataclass(frozen=True)
class EquivalenceReport:
    """Quantitative versions of the conditions equivalent to ``c(p, q) < 1``.

    In finite dimensions every condition holds; the numbers measure how
    close a pair is to failing them.
    """

    norm_iterate_gap: float
    iterations: int
    converged: bool
    rate_bound_holds: bool
    spectral_gap_at_1: float
    degenerate: bool
    c_value: float
    join_in_algebra: bool
    join_residual: float
    unit_in_algebra: bool
    unit_residual: float | None
    complement_angle: float
    root_gap: float
    algebra_dim: int

    def to_json(self) -> dict:
        return {k: (v if not isinstance(v, np.generic) else v.item())
                for k, v in self.__dict__.items()}


def equivalence_battery(p, q, tol: Tolerance = DEFAULT_TOLERANCE) -> EquivalenceReport:
    """Run all seven diagnostics for the pair.

    * ``||(pqp)^n - e||`` iterated until it drops below ``eq_tol`` or
      ``iter_max`` steps; checked against ``(1 - gap)^n``.
    * the spectral gap of ``pqp`` at 1 and ``c(p, q)``.
    * membership of the join in the generated algebra, and whether that
      algebra's unit equals the join.
    * ``||(f - p)(f - q)||`` and ``||(p + q)^(1/n) - f||``.
    """
    from .algebra_closure import membership_residual, span_closure, unit_of

    p, q = _pair(p, q, tol)
    P, Q = p.matrix, q.matrix
    e = meet(p, q, tol).matrix
    f = join(p, q, tol)
    F = f.matrix
    gap = spectral_gap_at_1(p, q, tol)

    pqp = _compress(p, q)
    power = pqp.copy()
    n = 1
    dist = op_norm(power - e)
    while dist > tol.eq_tol and n < tol.iter_max:
        power = power @ pqp
        n += 1
        dist = op_norm(power - e)
    rate_ok = dist <= (1.0 - gap) ** n + tol.eq_tol

    alg = span_closure([P, Q], tol)
    jres = membership_residual(alg, F)
    unit = unit_of(alg, tol)
    ures = None if unit is None else op_norm(unit.matrix - F)

    root = _support_root(P + Q, n, tol)
    return EquivalenceReport(
        norm_iterate_gap=dist,
        iterations=n,
        converged=dist <= tol.eq_tol,
        rate_bound_holds=bool(rate_ok),
        spectral_gap_at_1=gap,
        degenerate=gap < tol.cluster_tol,
        c_value=angle_c(p, q, tol),
        join_in_algebra=jres <= tol.membership_tol,
        join_residual=jres,
        unit_in_algebra=unit is not None and ures <= tol.membership_tol,
        unit_residual=ures,
        complement_angle=op_norm((F - P) @ (F - Q)),
        root_gap=op_norm(root - F),
        algebra_dim=alg.dim,
    )


def _support_root(a, n, tol):
    # eigenvalues below eq_tol are rounding noise on the kernel and map to 0
    s = hermitian_eig(a, tol)
    lam = s.eigenvalues
    vals = np.where(lam > tol.eq_tol, np.abs(lam) ** (1.0 / n), 0.0)
    v = s.eigenvectors
    return (v * vals) @ v.conj().T


# -- constructions -----------------------------------------------------------

def ramp_profile(params, tol: Tolerance = DEFAULT_TOLERANCE) -> tuple[int, np.ndarray]:
    """Peak index and values of an injective ramp over distinct parameters.

    The peak sits at the lower median of the parameters and takes the
    value 1.  Left of the peak the ramp falls with slope 1, right of it with
    slope sqrt(2) (distinct slopes keep it injective), scaled so the
    minimum is at least 1/2.
    """
    t = np.asarray(params, dtype=float)
    peak = int(np.argsort(t, kind="stable")[(len(t) - 1) // 2])
    d = t - t[peak]
    dist = np.where(d <= 0, -d, math.sqrt(2.0) * d)
    width = 2.0 * dist.max()
    f = 1.0 - dist / width
    if len(np.unique(np.round(f / tol.eq_tol))) != len(f):
        raise NotApplicableError("ramp is not injective on these parameters; pass f_values")
    return peak, f


def bad_pair_from_spectrum(p, q, tol: Tolerance = DEFAULT_TOLERANCE, f_values=None):
    """Two projections ``r, s`` in the algebra of ``(p, q)`` with angle near 1.

    With ``f`` a function on the distinct generic parameters of the pair
    (default :func:`ramp_profile`), ``s`` is ``p`` minus ``p^q'`` and, on
    each generic block, ``r = [[f^2, fg], [fg, g^2]]`` with
    ``g = sqrt(1 - f^2)``; corners of ``r`` vanish.  Then ``srs`` is
    ``diag(f^2)`` on the generic part, so ``c(s, r)`` is the largest
    value of ``f`` below 1.

    Returns
    -------
    r, s : ProjectionMatrix
    c_rs : float
        ``angle_c(s, r)``.
    """
    p, q = _pair(p, q, tol)
    form = canonical_form(p, q, tol)
    if len(form.generic) < 2:
        raise NotApplicableError(
            f"need at least 2 distinct generic parameters, got {len(form.generic)}")
    if f_values is None:
        _, f = ramp_profile(form.generic_params, tol)
    else:
        f = np.asarray(f_values, dtype=float)
        if f.shape != (len(form.generic),):
            raise ValidationError(f"f_values must have {len(form.generic)} entries")
        if np.any(f < 0) or np.any(f > 1):
            raise ValidationError("f_values must lie in [0, 1]")
        if len(np.unique(f)) != len(f):
            raise ValidationError("f_values must be injective")

    n = p.dim
    m, a, b, z = form.dims
    k = m + a + b + z
    r0 = np.zeros((n, n))
    s0 = np.zeros((n, n))
    s0[:m, :m] = np.eye(m)
    for fv, c in zip(f, form.generic):
        g = math.sqrt(max(1.0 - fv * fv, 0.0))
        for _ in range(c.multiplicity):
            r0[k:k + 2, k:k + 2] = [[fv * fv, fv * g], [fv * g, g * g]]
            s0[k, k] = 1.0
            k += 2
    u = form.unitary
    R = u @ r0 @ u.conj().T
    S = u @ s0 @ u.conj().T
    r = ProjectionMatrix(0.5 * (R + R.conj().T), tol)
    s = ProjectionMatrix(0.5 * (S + S.conj().T), tol)
    return r, s, angle_c(s, r, tol)


@dataclass(frozen=True)
class CounterexampleReport:
    n: int
    c_value: float
    meet_rank: int
    rank_p: int
    rank_q: int
    spectral_gap_at_1: float

    def to_json(self) -> dict:
        return dict(self.__dict__)


def truncated_counterexample(N: int, tol: Tolerance = DEFAULT_TOLERANCE):
    """Range projections of ``a = sum e_n / n`` and ``b = sum f_n / n``, ``n <= N``.

    ``e_n`` projects onto basis vector ``2n`` and ``f_n`` onto
    ``cos(1/n) xi_2n + sin(1/n) xi_2n+1`` in a space of dimension
    ``2N + 2``.  The ranges meet in 0 and ``c = cos(1/N)``.

    Returns
    -------
    p, q : ProjectionMatrix
    report : CounterexampleReport
    """
    if not isinstance(N, (int, np.integer)) or N < 2:
        raise ValidationError(f"N must be an integer >= 2, got {N!r}")
    dim = 2 * N + 2
    a = np.zeros((dim, dim))
    b = np.zeros((dim, dim))
    for n in range(1, N + 1):
        xi = np.zeros(dim)
        xi[2 * n] = 1.0
        eta = np.zeros(dim)
        eta[2 * n] = math.cos(1.0 / n)
        eta[2 * n + 1] = math.sin(1.0 / n)
        a += np.outer(xi, xi) / n
        b += np.outer(eta, eta) / n
    p = _support(a, tol)
    q = _support(b, tol)
    e = meet(p, q, tol)
    report = CounterexampleReport(
        n=int(N),
        c_value=angle_c(p, q, tol),
        meet_rank=e.rank,
        rank_p=p.rank,
        rank_q=q.rank,
        spectral_gap_at_1=spectral_gap_at_1(p, q, tol),
    )
    return p, q, report


def _support(a, tol):
    # range projection of a positive operator: lim a^(1/k)
    s = hermitian_eig(a, tol)
    return ProjectionMatrix(spectral_projection(s, s.eigenvalues > tol.eq_tol), tol)
