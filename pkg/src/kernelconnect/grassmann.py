"""Finite Grassmannians as projector manifolds, and their connections.

Points of Gr(k, C^n) are Hermitian projectors p = p* = p^2 of rank k; tangent
vectors are anti-Hermitian generators A with vanishing diagonal blocks
(p A p = (1-p) A (1-p) = 0), moving the point along e^{tA} p e^{-tA}.  Fibers
get concrete coordinates through deterministic orthonormal column bases.

The module provides the conditional expectation onto block-diagonal matrices,
the reductive-structure axioms as residuals, the Maurer-Cartan form, the
kernel of orthogonal projections between subspaces, and three independent
routes to the covariant derivative on the tautological bundle (projected
differential, reductive formula, generic kernel machinery), plus the
homogeneous-bundle kernel and its derivative on unitary groups.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg

from .kernels import Domain, DomainError, Kernel, UnitaryDomain
from .numerics import DEFAULT_STEP, directional_derivative

__all__ = [
    "HermitianProjector",
    "GrassTangent",
    "GrassDomain",
    "ReductiveStructure",
    "coordinate_projector",
    "projector_from_basis",
    "fiber_basis",
    "conditional_expectation",
    "reductive_axioms_residual",
    "maurer_cartan",
    "random_grass_tangent",
    "universal_kernel",
    "grass_section_coordinates",
    "universal_covariant_derivative",
    "reductive_covariant_derivative",
    "phi_E_vertical",
    "homogeneous_kernel",
    "homogeneous_covariant_derivative",
]


@dataclass(frozen=True)
class HermitianProjector:
    """A point of the Grassmannian: p = p* = p^2 with trace(p) = rank."""

    p: np.ndarray
    rank: int

    def __post_init__(self):
        m = np.asarray(self.p, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError(f"projector must be square, got shape {m.shape}")
        if np.linalg.norm(m - m.conj().T) > 1e-10:
            raise DomainError("projector is not Hermitian")
        if np.linalg.norm(m @ m - m) > 1e-10:
            raise DomainError("matrix is not idempotent")
        if abs(np.trace(m).real - self.rank) > 1e-8:
            raise DomainError(
                f"trace {np.trace(m).real:.6f} does not match declared rank {self.rank}")
        object.__setattr__(self, "p", m)

    @property
    def n(self) -> int:
        return self.p.shape[0]

    def complement(self) -> np.ndarray:
        return np.eye(self.n) - self.p


@dataclass(frozen=True)
class GrassTangent:
    """A tangent vector at a projector: anti-Hermitian A with zero diagonal blocks."""

    base: HermitianProjector
    generator: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.generator, dtype=complex)
        p = self.base.p
        if a.shape != p.shape:
            raise DomainError(f"generator shape {a.shape} does not match base {p.shape}")
        if np.linalg.norm(a + a.conj().T) > 1e-10:
            raise DomainError("generator is not anti-Hermitian")
        q = self.base.complement()
        diag = np.linalg.norm(p @ a @ p) + np.linalg.norm(q @ a @ q)
        if diag > 1e-10:
            raise DomainError(
                f"generator has diagonal blocks (residual {diag:.3e}); "
                "it must lie in the reductive complement")
        object.__setattr__(self, "generator", a)


def coordinate_projector(n: int, k: int) -> HermitianProjector:
    p = np.zeros((n, n), dtype=complex)
    p[:k, :k] = np.eye(k)
    return HermitianProjector(p, k)


def projector_from_basis(b) -> HermitianProjector:
    """Projector onto the column span of an orthonormal-column matrix."""
    m = np.asarray(b, dtype=complex)
    k = m.shape[1]
    if np.linalg.norm(m.conj().T @ m - np.eye(k)) > 1e-10:
        raise DomainError("columns are not orthonormal")
    return HermitianProjector(m @ m.conj().T, k)


def fiber_basis(point: HermitianProjector) -> np.ndarray:
    """Deterministic orthonormal column basis of the range of a projector.

    Eigenvectors of p with eigenvalue 1, ascending order, each column's
    largest-modulus entry rotated to be real positive.  Reproducible, but not
    a continuous function of the projector (the eigenspace is degenerate), so
    only gauge-covariant combinations of bases are meaningful.
    """
    values, vectors = np.linalg.eigh(0.5 * (point.p + point.p.conj().T))
    cols = vectors[:, values > 0.5]
    if cols.shape[1] != point.rank:
        raise DomainError(
            f"projector has {cols.shape[1]} near-1 eigenvalues, expected rank {point.rank}")
    fixed = np.empty_like(cols)
    for j in range(cols.shape[1]):
        col = cols[:, j]
        idx = int(np.argmax(np.abs(col)))
        phase = col[idx] / abs(col[idx])
        fixed[:, j] = col / phase
    return fixed


@dataclass(frozen=True)
class GrassDomain(Domain):
    """Rank-k projectors in C^n, with conjugation curves e^{tA} p e^{-tA}."""

    n: int
    k: int

    def check_point(self, s) -> None:
        if not isinstance(s, HermitianProjector):
            raise DomainError("Grassmann points must be HermitianProjector values")
        if s.n != self.n or s.rank != self.k:
            raise DomainError(
                f"expected rank-{self.k} projector in C^{self.n}, "
                f"got rank {s.rank} in C^{s.n}")

    def check_tangent(self, s, x) -> None:
        if not isinstance(x, GrassTangent):
            raise DomainError("Grassmann tangents must be GrassTangent values")
        if not np.allclose(x.base.p, s.p, atol=1e-10):
            raise DomainError("tangent is anchored at a different base point")

    def curve(self, s, x) -> Callable[[float], HermitianProjector]:
        a = x.generator

        def gamma(t: float) -> HermitianProjector:
            u = scipy.linalg.expm(t * a)
            return HermitianProjector(u @ s.p @ u.conj().T, s.rank)

        return gamma


@dataclass(frozen=True)
class ReductiveStructure:
    """The block-compression idempotent E_p(X) = pXp + (1-p)X(1-p) at a projector."""

    point: HermitianProjector

    def expect(self, x) -> np.ndarray:
        return conditional_expectation(self.point, x)

    def complement_residual(self, a) -> float:
        """Distance of E_p(a) from zero: membership test for the complement m."""
        return float(np.linalg.norm(self.expect(a)))


def conditional_expectation(point: HermitianProjector, x) -> np.ndarray:
    """Compression onto block-diagonal matrices: X -> pXp + (1-p)X(1-p)."""
    m = np.asarray(x, dtype=complex)
    if m.shape != point.p.shape:
        raise DomainError(f"operand shape {m.shape} does not match projector {point.p.shape}")
    p = point.p
    q = point.complement()
    return p @ m @ p + q @ m @ q


def reductive_axioms_residual(rs: ReductiveStructure, unitaries: Sequence[np.ndarray],
                              n_probes: int = 20, seed: int = 0) -> float:
    """Idempotence and equivariance residuals of E_p against subgroup unitaries.

    Every g must commute with p (that is the subgroup membership condition);
    the residual is the max over g and random X of ||E(g X g^-1) - g E(X) g^-1||,
    together with ||E(E(X)) - E(X)||.
    """
    p = rs.point.p
    n = rs.point.n
    for g in unitaries:
        gm = np.asarray(g, dtype=complex)
        if np.linalg.norm(gm @ p - p @ gm) > 1e-10:
            raise DomainError("unitary does not commute with the projector")
    rng = np.random.default_rng(seed)
    res = 0.0
    for _ in range(n_probes):
        x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        ex = rs.expect(x)
        res = max(res, float(np.linalg.norm(rs.expect(ex) - ex)))
        for g in unitaries:
            gm = np.asarray(g, dtype=complex)
            lhs = rs.expect(gm @ x @ gm.conj().T)
            rhs = gm @ ex @ gm.conj().T
            res = max(res, float(np.linalg.norm(lhs - rhs)))
    return res


def maurer_cartan(rs: ReductiveStructure, g, x, tol: float = 1e-10) -> np.ndarray:
    """The tangent-identification 1-form: (g, X) -> g X g^-1 for X in the complement."""
    gm = np.asarray(g, dtype=complex)
    xm = np.asarray(x, dtype=complex)
    if rs.complement_residual(xm) > tol:
        raise DomainError("direction is not in the reductive complement of E_p")
    return gm @ xm @ gm.conj().T


def random_grass_tangent(point: HermitianProjector, rng: np.random.Generator,
                         scale: float = 1.0) -> GrassTangent:
    """A random off-diagonal anti-Hermitian generator at the given projector."""
    b = fiber_basis(point)
    values, vectors = np.linalg.eigh(point.p)
    c = vectors[:, values <= 0.5]
    k, nk = b.shape[1], c.shape[1]
    r = scale * (rng.standard_normal((k, nk)) + 1j * rng.standard_normal((k, nk)))
    a = b @ r @ c.conj().T
    return GrassTangent(point, a - a.conj().T)


def universal_kernel(n: int, k: int) -> Kernel:
    """The kernel of orthogonal projections between rank-k subspaces of C^n.

    In the deterministic fiber bases, kappa(S1, S2) = B1* B2 (the matrix of
    the projection of fiber S2 onto fiber S1); kappa(S, S) is the identity.
    """
    domain = GrassDomain(n, k)

    def ev(s1: HermitianProjector, s2: HermitianProjector):
        return fiber_basis(s1).conj().T @ fiber_basis(s2)

    return Kernel(k, domain, ev, name=f"universal:n={n},k={k}")


def grass_section_coordinates(f_ambient: Callable[[HermitianProjector], np.ndarray]):
    """Turn an ambient fiber-valued section into deterministic fiber coordinates."""

    def coords(point: HermitianProjector) -> np.ndarray:
        return fiber_basis(point).conj().T @ np.asarray(f_ambient(point), dtype=complex)

    return coords


def _check_fiber_valued(f_ambient, point: HermitianProjector, tol: float = 1e-8) -> None:
    value = np.asarray(f_ambient(point), dtype=complex)
    res = np.linalg.norm(point.complement() @ value)
    if res > tol:
        raise DomainError(f"section is not fiber-valued: ||(1-p) F(p)|| = {res:.3e}")


def universal_covariant_derivative(f_ambient: Callable[[HermitianProjector], np.ndarray],
                                   point: HermitianProjector, tangent: GrassTangent,
                                   h: float = DEFAULT_STEP) -> np.ndarray:
    """Projected differential p . d/dt F(e^{tA} p e^{-tA}) of a fiber-valued section."""
    domain = GrassDomain(point.n, point.rank)
    domain.check_tangent(point, tangent)
    gamma = domain.curve(point, tangent)
    for t in (-2.0 * h, 0.0, 2.0 * h):
        _check_fiber_valued(f_ambient, gamma(t))
    deriv = directional_derivative(
        lambda t: np.asarray(f_ambient(gamma(t)), dtype=complex), h=h)
    return point.p @ deriv


def reductive_covariant_derivative(f_ambient: Callable[[HermitianProjector], np.ndarray],
                                   g, x, base: HermitianProjector,
                                   h: float = DEFAULT_STEP) -> np.ndarray:
    """Covariant derivative through the reductive splitting of the unitary group.

    The section is read on the orbit point g p g^-1 along the coset curve
    g e^{tX}; the correction term is the adjoint-transported generator acting
    on the section value:

        dF(curve) - (g X g^-1) F(g p g^-1),  X in the complement at p.
    """
    gm = np.asarray(g, dtype=complex)
    rs = ReductiveStructure(base)
    xm = np.asarray(x, dtype=complex)
    if rs.complement_residual(xm) > 1e-10:
        raise DomainError("direction is not in the reductive complement at the base projector")

    def orbit(t: float) -> HermitianProjector:
        u = gm @ scipy.linalg.expm(t * xm)
        return HermitianProjector(u @ base.p @ u.conj().T, base.rank)

    deriv = directional_derivative(
        lambda t: np.asarray(f_ambient(orbit(t)), dtype=complex), h=h)
    here = orbit(0.0)
    correction = maurer_cartan(rs, gm, xm) @ np.asarray(f_ambient(here), dtype=complex)
    return deriv - correction


def phi_E_vertical(rs: ReductiveStructure, g, x, f, h) -> tuple[np.ndarray, np.ndarray]:
    """Vertical normal form of the reductive connection on a tangent element.

    Maps the data (direction X, fiber pair (f, h)) at g to (f, E(X) f + h);
    horizontal directions (E(X) = 0) leave the pair unchanged.  f and h must
    lie in the range of the projector.
    """
    fv = np.asarray(f, dtype=complex)
    hv = np.asarray(h, dtype=complex)
    p = rs.point.p
    for name, vec in (("f", fv), ("h", hv)):
        if np.linalg.norm(vec - p @ vec) > 1e-10:
            raise DomainError(f"component {name} does not lie in the projector range")
    ex = rs.expect(np.asarray(x, dtype=complex))
    return fv, ex @ fv + hv


def homogeneous_kernel(n: int, point: HermitianProjector) -> Kernel:
    """Group-indexed kernel u, v -> compression of u* v to the range of P.

    Lives on the trivial bundle over U(n) with fiber coordinates given by the
    deterministic basis of Ran P; kappa(u, u) is the identity.
    """
    b = fiber_basis(point)
    domain = UnitaryDomain(n)

    def ev(u, v):
        um = np.asarray(u, dtype=complex)
        vm = np.asarray(v, dtype=complex)
        return b.conj().T @ (um.conj().T @ vm) @ b

    def d2(u, v, a):
        um = np.asarray(u, dtype=complex)
        vm = np.asarray(v, dtype=complex)
        am = np.asarray(a, dtype=complex)
        return b.conj().T @ (um.conj().T @ vm @ am) @ b

    return Kernel(point.rank, domain, ev, d2, name=f"homogeneous:n={n},k={point.rank}")


def homogeneous_covariant_derivative(phi: Callable[[np.ndarray], np.ndarray],
                                     point: HermitianProjector, u, x,
                                     h: float = DEFAULT_STEP,
                                     equivariance_probes: Optional[Sequence[np.ndarray]] = None,
                                     equivariance_tol: float = 1e-8) -> np.ndarray:
    """d(phi) along u e^{tX} plus the compressed generator action P X phi(u).

    phi maps unitaries into Ran P (ambient coordinates) and must be
    equivariant under block unitaries, phi(u w) = w^-1 phi(u); spot-checked
    when probes are supplied.
    """
    um = np.asarray(u, dtype=complex)
    xm = np.asarray(x, dtype=complex)
    p = point.p
    value = np.asarray(phi(um), dtype=complex)
    if np.linalg.norm(value - p @ value) > 1e-8:
        raise DomainError("phi does not map into the projector range")
    if equivariance_probes is not None:
        for w in equivariance_probes:
            wm = np.asarray(w, dtype=complex)
            if np.linalg.norm(wm @ p - p @ wm) > 1e-10:
                raise DomainError("equivariance probe does not commute with P")
            res = np.linalg.norm(np.asarray(phi(um @ wm), dtype=complex)
                                 - wm.conj().T @ value)
            if res > equivariance_tol:
                raise DomainError(f"phi violates equivariance (residual {res:.3e})")
    dphi = directional_derivative(
        lambda t: np.asarray(phi(um @ scipy.linalg.expm(t * xm)), dtype=complex), h=h)
    return dphi + p @ (xm @ value)
