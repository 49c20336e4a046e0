"""Desk-scale model of an extension of an abelian algebra by compacts.

The algebra is ``A = {(a, c) : pi(a) = tau(c)}`` where ``a`` is a block
diagonal multiplier of ``K = c0-sum of K(H_j)`` and ``c`` lives in a
finite-dimensional abelian algebra ``C = C^spectrum``.

Each block ``j`` models an infinite-dimensional ``H_j`` by a truncation
of size ``N_j``: an operator on the block is ``lambda I + a`` where the
scalar ``lambda`` is its Calkin symbol and ``a`` is supported on the
first ``N_j`` coordinates.  Blocks of kind ``"finite"`` model
``dim H_j < inf``; they carry scalar 0 and a plain matrix.  The Busby map
assigns each infinite block the spectrum point its symbol is read from,
so ``pi(a) = tau(c)`` reads ``lambda_j = c(busby[j])``.  Scalars are
central in the modeled corona by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import IllConditionedError, MatrixFormatError, ValidationError
from .linalg_core import (
    DEFAULT_TOLERANCE,
    Tolerance,
    as_matrix,
    direct_sum,
    hermitian_eig,
    matrix_from_json,
    matrix_to_json,
    op_norm,
    random_hermitian,
    random_projection,
    spectral_projection,
)
from .two_projections import ProjectionMatrix, angle_c, meet

__all__ = [
    "Block", "BlockSystem", "ScalarPlusFinite", "ExtensionElement",
    "make_projection", "angle_in_extension", "self_adjoint_lift", "lift_projection",
    "decompose_projection", "forbidden_family_scan", "elementary_family",
    "random_element", "random_projection_element", "FamilyScan",
]

KINDS = ("infinite", "finite")


@dataclass(frozen=True)
class Block:
    label: str
    dim: int
    kind: str = "infinite"

    @property
    def models_infinite(self) -> bool:
        return self.kind == "infinite"


@dataclass(frozen=True)
class BlockSystem:
    """Blocks, the spectrum of the abelian quotient, and the Busby assignment."""

    blocks: tuple[Block, ...]
    spectrum: tuple[str, ...]
    busby: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        labels = [b.label for b in self.blocks]
        if len(set(labels)) != len(labels):
            raise ValidationError(f"block labels must be distinct: {labels}")
        if len(set(self.spectrum)) != len(self.spectrum):
            raise ValidationError(f"spectrum points must be distinct: {list(self.spectrum)}")
        for b in self.blocks:
            if b.kind not in KINDS:
                raise ValidationError(f"block {b.label!r}: kind must be one of {KINDS}")
            if not isinstance(b.dim, int) or b.dim < 1:
                raise ValidationError(f"block {b.label!r}: truncation dim must be >= 1")
            if b.models_infinite and b.label not in self.busby:
                raise ValidationError(f"busby map is not defined on infinite block {b.label!r}")
        for j, s in self.busby.items():
            if j not in labels:
                raise ValidationError(f"busby map references unknown block {j!r}")
            if s not in self.spectrum:
                raise ValidationError(f"busby map sends {j!r} to unknown point {s!r}")

    def block(self, label: str) -> Block:
        for b in self.blocks:
            if b.label == label:
                return b
        raise KeyError(label)

    def symbol_point(self, label: str) -> str | None:
        b = self.block(label)
        return self.busby[label] if b.models_infinite else None

    def to_json(self) -> dict:
        return {
            "blocks": [{"label": b.label, "dim": b.dim, "kind": b.kind} for b in self.blocks],
            "spectrum": list(self.spectrum),
            "busby": dict(self.busby),
        }

    @classmethod
    def from_json(cls, doc) -> "BlockSystem":
        try:
            blocks = tuple(Block(str(b["label"]), b["dim"], b.get("kind", "infinite"))
                           for b in doc["blocks"])
            spectrum = tuple(str(s) for s in doc["spectrum"])
            busby = {str(k): str(v) for k, v in doc.get("busby", {}).items()}
        except (KeyError, TypeError, AttributeError) as exc:
            raise MatrixFormatError(f"malformed system document: {exc!r}") from None
        return cls(blocks, spectrum, busby)


@dataclass(frozen=True)
class ScalarPlusFinite:
    """``scalar * I + finite`` on one block; ``finite`` lives on the truncation."""

    scalar: complex
    finite: np.ndarray

    def truncation(self) -> np.ndarray:
        n = self.finite.shape[0]
        return self.scalar * np.eye(n) + self.finite


@dataclass(frozen=True)
class ExtensionElement:
    """A pair ``(a, c)``: multiplier part per block and abelian part per point."""

    system: BlockSystem
    blocks: Mapping[str, ScalarPlusFinite]
    abelian: Mapping[str, complex]

    def __post_init__(self):
        for b in self.system.blocks:
            part = self.blocks.get(b.label)
            if part is None:
                raise ValidationError(f"element lacks block {b.label!r}")
            if part.finite.shape != (b.dim, b.dim):
                raise ValidationError(
                    f"block {b.label!r}: finite part must be {b.dim}x{b.dim}, got {part.finite.shape}")
        if set(self.abelian) != set(self.system.spectrum):
            raise ValidationError("abelian part must be indexed by the spectrum points")

    def compatibility_defect(self) -> float:
        """``max |lambda_j - c(busby[j])|``, plus any nonzero symbol on finite blocks."""
        worst = 0.0
        for b in self.system.blocks:
            lam = self.blocks[b.label].scalar
            target = self.abelian[self.system.busby[b.label]] if b.models_infinite else 0.0
            worst = max(worst, abs(lam - target))
        return worst

    # arithmetic: the tail of each block is lambda * I, so products of
    # scalar-plus-finite operators close up blockwise
    def _combine(self, other, fblock, fab):
        blocks = {j: fblock(self.blocks[j], other.blocks[j]) for j in self.blocks}
        abelian = {s: fab(self.abelian[s], other.abelian[s]) for s in self.abelian}
        return ExtensionElement(self.system, blocks, abelian)

    def __add__(self, other):
        return self._combine(other, lambda x, y: ScalarPlusFinite(x.scalar + y.scalar, x.finite + y.finite),
                             lambda a, b: a + b)

    def __sub__(self, other):
        return self._combine(other, lambda x, y: ScalarPlusFinite(x.scalar - y.scalar, x.finite - y.finite),
                             lambda a, b: a - b)

    def __matmul__(self, other):
        def mul(x, y):
            return ScalarPlusFinite(x.scalar * y.scalar,
                                    x.scalar * y.finite + y.scalar * x.finite + x.finite @ y.finite)
        return self._combine(other, mul, lambda a, b: a * b)

    def adjoint(self) -> "ExtensionElement":
        blocks = {j: ScalarPlusFinite(np.conj(x.scalar), x.finite.conj().T) for j, x in self.blocks.items()}
        return ExtensionElement(self.system, blocks, {s: np.conj(v) for s, v in self.abelian.items()})

    def norm(self) -> float:
        """Operator norm; each infinite tail contributes ``|lambda|``."""
        vals = [abs(v) for v in self.abelian.values()]
        for b in self.system.blocks:
            x = self.blocks[b.label]
            vals.append(op_norm(x.truncation()))
            if b.models_infinite:
                vals.append(abs(x.scalar))
        return max(vals, default=0.0)

    def to_matrix(self) -> np.ndarray:
        """Block diagonal of the truncations followed by ``diag(abelian)``."""
        mats = [self.blocks[b.label].truncation() for b in self.system.blocks]
        mats += [np.array([[self.abelian[s]]]) for s in self.system.spectrum]
        return direct_sum(*mats)

    def to_json(self) -> dict:
        return {
            "blocks": {j: {"scalar": [float(np.real(x.scalar)), float(np.imag(x.scalar))],
                           "finite": matrix_to_json(x.finite)} for j, x in self.blocks.items()},
            "abelian": {s: [float(np.real(v)), float(np.imag(v))] for s, v in self.abelian.items()},
        }

    @classmethod
    def from_json(cls, system: BlockSystem, doc) -> "ExtensionElement":
        try:
            blocks = {str(j): ScalarPlusFinite(complex(*x["scalar"]), matrix_from_json(x["finite"]))
                      for j, x in doc["blocks"].items()}
            abelian = {str(s): complex(*v) for s, v in doc["abelian"].items()}
        except (KeyError, TypeError, AttributeError) as exc:
            raise MatrixFormatError(f"malformed element document: {exc!r}") from None
        return cls(system, blocks, abelian)


def _zero_element(system, abelian=None):
    blocks = {b.label: ScalarPlusFinite(0j, np.zeros((b.dim, b.dim), dtype=np.complex128))
              for b in system.blocks}
    ab = {s: 0j for s in system.spectrum} if abelian is None else abelian
    return ExtensionElement(system, blocks, ab)


def _bits(system, bits):
    out = {}
    for s in system.spectrum:
        v = bits.get(s, 0)
        if v not in (0, 1):
            raise ValidationError(f"abelian bit at {s!r} must be 0 or 1, got {v!r}")
        out[s] = int(v)
    unknown = set(bits) - set(system.spectrum)
    if unknown:
        raise ValidationError(f"bits reference unknown points {sorted(unknown)}")
    return out


def _check_projection(elem: ExtensionElement, tol: Tolerance):
    for s, v in elem.abelian.items():
        if abs(v) > tol.eq_tol and abs(v - 1) > tol.eq_tol:
            raise ValidationError(f"abelian part at {s!r} is {v}, not 0 or 1")
    for b in elem.system.blocks:
        x = elem.blocks[b.label]
        lam = x.scalar
        if abs(lam) > tol.eq_tol and abs(lam - 1) > tol.eq_tol:
            raise ValidationError(f"block {b.label!r}: symbol {lam} is not 0 or 1")
        ProjectionMatrix(x.truncation(), tol)
    if elem.compatibility_defect() > tol.eq_tol:
        raise ValidationError("element violates pi(a) = tau(c)")


def make_projection(system: BlockSystem, abelian_bits: Mapping[str, int],
                    perturbations: Mapping[str, np.ndarray] | None = None,
                    tol: Tolerance = DEFAULT_TOLERANCE) -> ExtensionElement:
    """Projection ``(p, q)`` from 0/1 bits and per-block finite-rank perturbations.

    On infinite block ``j`` the operator is ``lambda_j I + a_j`` with
    ``lambda_j = bits[busby[j]]``; on finite blocks it is ``a_j``.  Each
    must be a projection, so a block has finite rank (``lambda = 0``) or
    finite co-rank (``lambda = 1``).

    Raises
    ------
    ValidationError
        Bits outside {0, 1}, or a block that is not idempotent.
    """
    bits = _bits(system, abelian_bits)
    perturbations = perturbations or {}
    unknown = set(perturbations) - {b.label for b in system.blocks}
    if unknown:
        raise ValidationError(f"perturbations reference unknown blocks {sorted(unknown)}")
    blocks = {}
    for b in system.blocks:
        lam = bits[system.busby[b.label]] if b.models_infinite else 0
        a = perturbations.get(b.label)
        a = np.zeros((b.dim, b.dim), dtype=np.complex128) if a is None else as_matrix(a, b.label)
        if a.shape != (b.dim, b.dim):
            raise ValidationError(f"block {b.label!r}: perturbation must be {b.dim}x{b.dim}")
        try:
            ProjectionMatrix(lam * np.eye(b.dim) + a, tol)
        except ValidationError as exc:
            raise ValidationError(f"block {b.label!r} (symbol {lam}): {exc}") from None
        blocks[b.label] = ScalarPlusFinite(complex(lam), a)
    return ExtensionElement(system, blocks, {s: complex(v) for s, v in bits.items()})


def angle_in_extension(P1: ExtensionElement, P2: ExtensionElement,
                       tol: Tolerance = DEFAULT_TOLERANCE) -> float:
    """``max(c(p1, p2), c(q1, q2))`` computed blockwise.

    The tails of both operators on each block are scalars and commute, so
    the block angle is the angle of the truncations.  The abelian parts
    commute and contribute 0.
    """
    if P1.system != P2.system:
        raise ValidationError("elements belong to different systems")
    _check_projection(P1, tol)
    _check_projection(P2, tol)
    worst = 0.0
    for b in P1.system.blocks:
        worst = max(worst, angle_c(P1.blocks[b.label].truncation(),
                                   P2.blocks[b.label].truncation(), tol))
    return worst


def self_adjoint_lift(system: BlockSystem, q_bits: Mapping[str, int],
                      noise: Mapping[str, np.ndarray] | None = None) -> ExtensionElement:
    """The self-adjoint element ``(bits I + noise, bits)``."""
    bits = _bits(system, q_bits)
    noise = noise or {}
    blocks = {}
    for b in system.blocks:
        lam = bits[system.busby[b.label]] if b.models_infinite else 0
        x = noise.get(b.label)
        x = np.zeros((b.dim, b.dim), dtype=np.complex128) if x is None else as_matrix(x, b.label)
        if x.shape != (b.dim, b.dim):
            raise ValidationError(f"block {b.label!r}: noise must be {b.dim}x{b.dim}")
        if np.linalg.norm(x - x.conj().T, 2) > DEFAULT_TOLERANCE.eq_tol * max(1.0, op_norm(x)):
            raise ValidationError(f"block {b.label!r}: noise must be Hermitian")
        blocks[b.label] = ScalarPlusFinite(complex(lam), 0.5 * (x + x.conj().T))
    return ExtensionElement(system, blocks, {s: complex(v) for s, v in bits.items()})


def lift_projection(system: BlockSystem, q_bits: Mapping[str, int],
                    noise: Mapping[str, np.ndarray] | None = None,
                    tol: Tolerance = DEFAULT_TOLERANCE) -> ExtensionElement:
    """Lift a projection of the abelian quotient to a projection of ``A``.

    Forms ``a = bits I + noise`` and takes, per block, the spectral
    projection of ``a`` off ``[-1/2, 1/2]``.  The tail eigenvalue is the
    bit itself, so the symbol of the lift equals the bit and the lift
    differs from ``a`` only on the truncation.

    Raises
    ------
    IllConditionedError
        If an eigenvalue of ``a`` is within ``cluster_tol`` of ``+-1/2``.
    """
    a = self_adjoint_lift(system, q_bits, noise)
    blocks = {}
    for b in system.blocks:
        x = a.blocks[b.label]
        s = hermitian_eig(x.truncation(), tol)
        near = np.abs(np.abs(s.eigenvalues) - 0.5) <= tol.cluster_tol
        if near.any():
            raise IllConditionedError(
                f"block {b.label!r}: eigenvalue {s.eigenvalues[near][0]:.6g} too close to +-1/2")
        proj = spectral_projection(s, np.abs(s.eigenvalues) > 0.5)
        lam = x.scalar
        blocks[b.label] = ScalarPlusFinite(lam, proj - lam * np.eye(b.dim))
    out = ExtensionElement(system, blocks, dict(a.abelian))
    _check_projection(out, tol)
    return out


def decompose_projection(P: ExtensionElement, tol: Tolerance = DEFAULT_TOLERANCE):
    """Split a projection into a compact part and a central part.

    The central part is ``lambda_j I`` on each block together with the
    abelian part; the compact part keeps the finite perturbations and has
    zero symbols.  On each block the compact part is a finite-rank
    projection (symbol 0) or minus one (symbol 1).

    Returns
    -------
    compact_part, central_part : ExtensionElement
        ``compact_part + central_part == P`` exactly.
    """
    _check_projection(P, tol)
    system = P.system
    compact = {j: ScalarPlusFinite(0j, x.finite.copy()) for j, x in P.blocks.items()}
    central = {j: ScalarPlusFinite(x.scalar, np.zeros_like(x.finite)) for j, x in P.blocks.items()}
    return (ExtensionElement(system, compact, {s: 0j for s in system.spectrum}),
            ExtensionElement(system, central, dict(P.abelian)))


def commutator_norm(x: ExtensionElement, y: ExtensionElement) -> float:
    return (x @ y - y @ x).norm()


# -- random sampling -----------------------------------------------------------

def random_element(system: BlockSystem, rng: np.random.Generator) -> ExtensionElement:
    """A random (non-projection) element satisfying the compatibility condition."""
    ab = {s: complex(rng.standard_normal(), rng.standard_normal()) for s in system.spectrum}
    blocks = {}
    for b in system.blocks:
        lam = ab[system.busby[b.label]] if b.models_infinite else 0j
        z = rng.standard_normal((b.dim, b.dim)) + 1j * rng.standard_normal((b.dim, b.dim))
        blocks[b.label] = ScalarPlusFinite(lam, z)
    return ExtensionElement(system, blocks, ab)


def random_projection_element(system: BlockSystem, rng: np.random.Generator,
                              tol: Tolerance = DEFAULT_TOLERANCE) -> ExtensionElement:
    """Random bits and, per block, a random finite-rank or finite-co-rank projection."""
    bits = {s: int(rng.integers(0, 2)) for s in system.spectrum}
    pert = {}
    for b in system.blocks:
        lam = bits[system.busby[b.label]] if b.models_infinite else 0
        r = random_projection(rng, b.dim)
        # lambda = 1 blocks become I - r: finite co-rank
        pert[b.label] = r if lam == 0 else -r
    return make_projection(system, bits, pert, tol)


def random_noise(system: BlockSystem, rng: np.random.Generator, norm: float) -> dict:
    out = {}
    for b in system.blocks:
        h = random_hermitian(rng, b.dim)
        out[b.label] = h * (norm / max(op_norm(h), 1e-300))
    return out


# -- forbidden family ---------------------------------------------------------

@dataclass(frozen=True)
class FamilyScan:
    """Outcome of :func:`forbidden_family_scan`."""

    q: np.ndarray
    block_values: list
    c_value: float
    max_c_k: float
    meet_rank: int
    p1_rank: int
    meet_gap: float

    def to_json(self) -> dict:
        return {
            "block_values": list(self.block_values),
            "c_value": self.c_value,
            "max_c_k": self.max_c_k,
            "meet_rank": self.meet_rank,
            "p1_rank": self.p1_rank,
            "meet_gap": self.meet_gap,
        }


def elementary_family(N: int, p1_rank: int = 0):
    """``p`` and ``N`` elementary triples ``(e_k, f_k, v_k)`` on coordinate lines.

    Coordinates ``0..N-1`` carry ``e_k``, ``N..2N-1`` carry ``f_k``, and
    ``p1_rank`` further coordinates carry ``p1``; ``v_k = |k><N+k|`` so
    ``v_k v_k* = e_k`` and ``v_k* v_k = f_k``.
    """
    if N < 1 or p1_rank < 0:
        raise ValidationError("need N >= 1 and p1_rank >= 0")
    dim = 2 * N + p1_rank
    p = np.zeros((dim, dim))
    pairs = []
    for k in range(N):
        e = np.zeros((dim, dim))
        f = np.zeros((dim, dim))
        v = np.zeros((dim, dim))
        e[k, k] = 1.0
        f[N + k, N + k] = 1.0
        v[k, N + k] = 1.0
        pairs.append((e, f, v))
        p += e
    for i in range(2 * N, dim):
        p[i, i] = 1.0
    return p, pairs


def forbidden_family_scan(p, pairs, angles, tol: Tolerance = DEFAULT_TOLERANCE) -> FamilyScan:
    """Build ``q = sum q_k + p1`` from an orthogonal equivalent family.

    ``q_k = c_k^2 e_k + c_k s_k (v_k + v_k*) + s_k^2 f_k`` with
    ``s_k = sqrt(1 - c_k^2)`` and ``p1 = p - sum e_k``.  Then
    ``||e_k q_k|| = c_k``, ``p ^ q = p1`` and ``c(p, q) = max c_k``.

    ``p`` may be a matrix, a :class:`ProjectionMatrix` or an
    :class:`ExtensionElement` (taken through :meth:`ExtensionElement.to_matrix`,
    in which case the triples must be given at that size).
    """
    if isinstance(p, ExtensionElement):
        p = p.to_matrix()
    P = ProjectionMatrix.coerce(p, tol).matrix
    n = P.shape[0]
    cs = np.asarray(angles, dtype=float)
    if len(pairs) == 0 or cs.shape != (len(pairs),):
        raise ValidationError("need one angle per (e, f, v) triple and at least one triple")
    if np.any(cs < 0) or np.any(cs > 1):
        raise ValidationError("angles c_k must lie in [0, 1]")
    thresh = tol.membership_tol
    es, fs, vs = [], [], []
    for k, (e, f, v) in enumerate(pairs):
        e = ProjectionMatrix(e, tol).matrix
        f = ProjectionMatrix(f, tol).matrix
        v = as_matrix(v, "v")
        if {e.shape, f.shape, v.shape} != {(n, n)}:
            raise ValidationError(f"triple {k} has the wrong dimension")
        checks = {
            "e_k <= p": np.linalg.norm(P @ e - e, 2),
            "f_k <= 1 - p": np.linalg.norm(P @ f, 2),
            "v v* = e": np.linalg.norm(v @ v.conj().T - e, 2),
            "v* v = f": np.linalg.norm(v.conj().T @ v - f, 2),
        }
        for name, val in checks.items():
            if val > thresh:
                raise ValidationError(f"triple {k}: {name} fails (residual {val:.3e})")
        es.append(e)
        fs.append(f)
        vs.append(v)
    members = es + fs
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            val = np.linalg.norm(members[i] @ members[j], 2)
            if val > thresh:
                raise ValidationError(f"family is not pairwise orthogonal (residual {val:.3e})")

    p1 = P - sum(es)
    Q = p1.copy()
    values = []
    for e, f, v, c in zip(es, fs, vs, cs):
        s = np.sqrt(1.0 - c * c)
        qk = c * c * e + c * s * (v + v.conj().T) + s * s * f
        Q = Q + qk
        values.append(op_norm(e @ qk))
    q = ProjectionMatrix(0.5 * (Q + Q.conj().T), tol)
    m = meet(P, q, tol)
    return FamilyScan(
        q=q.matrix,
        block_values=values,
        c_value=angle_c(P, q, tol),
        max_c_k=float(cs.max()),
        meet_rank=m.rank,
        p1_rank=int(round(float(np.trace(p1).real))),
        meet_gap=op_norm(m.matrix - p1),
    )
