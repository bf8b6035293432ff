"""Homogeneous ideals as graded families of subspaces.

Every ideal here is described degree by degree: ``I_n`` is the span of
``g * z**beta`` over generators ``g`` with ``deg g + |beta| = n``, and the
quotient component is its orthocomplement in the degree-n homogeneous
polynomials.

Quotient components are built upward from degree 0.  A degree-(n+1)
polynomial ``h`` lies in the quotient exactly when every backward shift
``M_{z_i}^* h`` lies in the degree-n quotient and ``h`` is orthogonal to the
generators of degree n+1.  This keeps the linear algebra at the size of the
quotient rather than the ambient space.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .poly import (
    HPoly,
    ThetaDirection,
    mult_matrix,
    multiply,
    rotate,
    shift_matrix,
    space_dim,
    w_basis,
)

EPS_RANK = 1e-10
EPS_MEMBER = 1e-9


@dataclass(frozen=True)
class DegreeBasis:
    """Orthonormal columns spanning a subspace of the degree-``degree`` polynomials."""

    degree: int
    ambient_dim: int
    columns: np.ndarray

    @property
    def dim(self) -> int:
        return self.columns.shape[1]

    def projector(self) -> np.ndarray:
        return self.columns @ self.columns.conj().T


def orth(a: np.ndarray, rtol: float = EPS_RANK, atol: float = 0.0) -> np.ndarray:
    """Orthonormal range basis from the SVD, cutoff ``rtol * s_max`` (or ``atol``)."""
    if a.shape[1] == 0 or a.shape[0] == 0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    u, s, _ = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros((a.shape[0], 0), dtype=complex)
    keep = s > max(rtol * s[0], atol)
    return u[:, keep].astype(complex, copy=False)


def null_space(a: np.ndarray, rtol: float = EPS_RANK, atol: float = 0.0) -> np.ndarray:
    """Orthonormal basis of the kernel of ``a`` (columns)."""
    ncols = a.shape[1]
    if a.shape[0] == 0:
        return np.eye(ncols, dtype=complex)
    _, s, vh = np.linalg.svd(a, full_matrices=a.shape[0] < ncols)
    cut = max(rtol * (s[0] if s.size else 0.0), atol)
    rank = int((s > cut).sum())
    return vh[rank:].conj().T.astype(complex, copy=False)


def null_space_gram(a: np.ndarray, rtol: float = 1e-8) -> np.ndarray:
    """Kernel of a tall ``a`` from the eigenvectors of ``a* a``.

    Squares the condition number, so only for matrices whose small singular
    values are separated from the rest by a wide gap (as in the quotient
    recursion, roughly 1e-15 against 0.5).  ``rtol`` is relative to the
    largest eigenvalue of the Gram matrix.
    """
    g = a.conj().T @ a
    w, v = np.linalg.eigh(0.5 * (g + g.conj().T))
    cut = rtol * max(w[-1], 1.0) if w.size else 0.0
    return v[:, w <= cut].astype(complex, copy=False)


class _GradedBase:
    """Shared behaviour; subclasses provide ``dim`` and ``_quotient_columns``."""

    dim: int

    def __init__(self):
        self._qcache: dict[int, np.ndarray] = {}
        self._icache: dict[int, np.ndarray] = {}
        self._lock = threading.Lock()

    def quotient_component(self, n: int) -> DegreeBasis:
        if n < 0:
            raise ValueError("degree must be non-negative")
        return DegreeBasis(n, space_dim(self.dim, n), self._quotient_columns(n))

    def degree_component(self, n: int) -> DegreeBasis:
        if n < 0:
            raise ValueError("degree must be non-negative")
        cols = self._icache.get(n)
        if cols is None:
            cols = self._ideal_columns(n)
            with self._lock:
                cols = self._icache.setdefault(n, cols)
        return DegreeBasis(n, space_dim(self.dim, n), cols)

    def _ideal_columns(self, n: int) -> np.ndarray:
        q = self._quotient_columns(n)
        return null_space(q.conj().T, atol=EPS_RANK)

    def hilbert_dims(self, D: int) -> list[tuple[int, int]]:
        """``[(dim I_n, dim quotient_n) for n = 0..D]``."""
        if D < 0:
            raise ValueError("D must be non-negative")
        out = []
        for n in range(D + 1):
            q = self._quotient_columns(n).shape[1]
            out.append((space_dim(self.dim, n) - q, q))
        return out

    def membership(self, h: HPoly, tol: float = EPS_MEMBER) -> tuple[bool, float]:
        """Whether ``h`` lies in the ideal, with the distance to ``I_{deg h}``."""
        if h.dim != self.dim:
            raise ValueError("dimension mismatch")
        if h.is_zero():
            return True, 0.0
        q = self._quotient_columns(h.degree)
        resid = float(np.linalg.norm(q.conj().T @ h.to_vector()))
        return resid <= tol * h.norm(), resid


class GradedIdeal(_GradedBase):
    """Ideal generated by homogeneous polynomials (possibly of mixed degree)."""

    def __init__(self, dim: int, generators: Sequence[HPoly] = (), name: str = ""):
        super().__init__()
        gens = []
        for k, g in enumerate(generators):
            if g.dim != dim:
                raise ValueError(f"generator {k} has d={g.dim}, expected {dim}")
            if g.is_zero():
                raise ValueError(f"generator {k} is zero")
            if g.degree == 0:
                raise ValueError("unit ideal is not supported")
            gens.append(g)
        self.dim = dim
        self.generators: tuple[HPoly, ...] = tuple(gens)
        self.name = name

    def __repr__(self) -> str:
        degs = [g.degree for g in self.generators]
        return f"GradedIdeal(d={self.dim}, generator degrees={degs}, name={self.name!r})"

    def _generator_matrix(self, n: int) -> np.ndarray:
        cols = [g.to_vector(n) for g in self.generators if g.degree == n]
        if not cols:
            return np.zeros((space_dim(self.dim, n), 0), dtype=complex)
        return np.column_stack(cols)

    def _ideal_columns(self, n: int) -> np.ndarray:
        # direct assembly of span{g z^beta}
        blocks = [
            mult_matrix(g, n - g.degree).toarray()
            for g in self.generators
            if g.degree <= n
        ]
        if not blocks:
            return np.zeros((space_dim(self.dim, n), 0), dtype=complex)
        return orth(np.hstack(blocks))

    def _quotient_columns(self, n: int) -> np.ndarray:
        cached = self._qcache.get(n)
        if cached is not None:
            return cached
        start = max((k for k in self._qcache if k < n), default=-1)
        if start < 0:
            q = self._orth_against_generators(np.ones((1, 1), dtype=complex), 0)
            with self._lock:
                self._qcache.setdefault(0, q)
            start = 0
        for m in range(start, n):
            if m + 1 in self._qcache:
                continue
            q = self._lift(self._qcache[m], m)
            with self._lock:
                self._qcache.setdefault(m + 1, q)
        return self._qcache[n]

    def _orth_against_generators(self, basis: np.ndarray, n: int) -> np.ndarray:
        gmat = self._generator_matrix(n)
        if gmat.shape[1] == 0 or basis.shape[1] == 0:
            return basis
        y = null_space(gmat.conj().T @ basis, atol=EPS_RANK * max(1.0, np.abs(gmat).max()))
        return orth(basis @ y, atol=0.5)

    def _lift(self, q: np.ndarray, n: int) -> np.ndarray:
        d = self.dim
        dq = q.shape[1]
        if dq == 0:
            return np.zeros((space_dim(d, n + 1), 0), dtype=complex)
        shifts = [shift_matrix(d, n, i) for i in range(d)]
        # h_alpha = (Q c_i)_{alpha - e_i} for any i with alpha_i >= 1; average them
        mq = [s @ q for s in shifts]
        counts = np.asarray(sum((s @ np.ones(s.shape[1])) for s in shifts))
        lift = np.hstack(mq) / counts[:, None]
        rows = []
        for i, s in enumerate(shifts):
            block = s.T @ lift
            block[:, i * dq : (i + 1) * dq] -= q
            rows.append(block)
        constraint = np.vstack(rows)
        coeffs = null_space_gram(constraint)
        candidates = orth(lift @ coeffs, atol=1e-8)
        return self._orth_against_generators(candidates, n + 1)


class IdealIntersection(_GradedBase):
    """Per-degree intersection of several ideals.

    The quotient of the intersection at degree n is the span of the
    component quotients at degree n.
    """

    def __init__(self, components: Sequence[_GradedBase], name: str = ""):
        super().__init__()
        if not components:
            raise ValueError("intersection of no ideals")
        dims = {c.dim for c in components}
        if len(dims) != 1:
            raise ValueError(f"components have different dimensions {sorted(dims)}")
        self.dim = dims.pop()
        self.components = tuple(components)
        self.name = name

    def __repr__(self) -> str:
        return f"IdealIntersection(d={self.dim}, components={len(self.components)})"

    def _quotient_columns(self, n: int) -> np.ndarray:
        cached = self._qcache.get(n)
        if cached is None:
            stacked = np.hstack([c._quotient_columns(n) for c in self.components])
            cached = orth(stacked, atol=EPS_RANK)
            with self._lock:
                cached = self._qcache.setdefault(n, cached)
        return cached


# ---------------------------------------------------------------------------
# constructors and algebra


def ideal_product(a: GradedIdeal, b: GradedIdeal) -> GradedIdeal:
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    gens = [multiply(g, h) for g in a.generators for h in b.generators]
    return GradedIdeal(a.dim, gens, name=f"({a.name})*({b.name})")


def ideal_power(ideal: GradedIdeal, N: int) -> GradedIdeal:
    if N < 1:
        raise ValueError("power must be >= 1 (unit ideal not supported)")
    out = ideal
    for _ in range(N - 1):
        out = ideal_product(out, ideal)
    # products repeat generators; keep one copy per monomial pattern
    return GradedIdeal(ideal.dim, _dedupe(out.generators), name=f"({ideal.name})^{N}")


def _dedupe(gens: Sequence[HPoly]) -> list[HPoly]:
    seen = set()
    out = []
    for g in gens:
        key = tuple(sorted((a, complex(round(c.real, 12), round(c.imag, 12))) for a, c in g.terms.items()))
        if key not in seen:
            seen.add(key)
            out.append(g)
    return out


def ideal_intersection_per_degree(a: _GradedBase, b: _GradedBase, n: int) -> DegreeBasis:
    """Orthonormal basis of ``a_n`` intersected with ``b_n``."""
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    stacked = np.hstack([a._quotient_columns(n), b._quotient_columns(n)])
    cols = null_space(stacked.conj().T, atol=EPS_RANK)
    return DegreeBasis(n, space_dim(a.dim, n), cols)


def j_theta(theta: ThetaDirection) -> GradedIdeal:
    """Prime ideal of the line {(theta_1 t, ..., theta_d t)}.

    Generated by ``w_2, ..., w_d`` composed with the inverse rotation.
    """
    inv = theta.inverse()
    gens = [rotate(w, inv) for w in w_basis(theta.dim)[1:]]
    return GradedIdeal(theta.dim, gens, name=f"J_theta{tuple(np.round(theta.theta, 6))}")


def j_power(d: int, N: int, theta: ThetaDirection | None = None) -> GradedIdeal:
    """``J_theta^N`` generated by the products ``w^alpha`` with ``alpha_1 = 0``."""
    theta = theta or ThetaDirection.ones(d)
    return ideal_power(j_theta(theta), N)


def maximal_ideal_power(d: int, N: int) -> GradedIdeal:
    from .poly import monomials

    gens = [HPoly.monomial(tuple(a)) for a in monomials(d, N)]
    return GradedIdeal(d, gens, name=f"m^{N}")


def subspace_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Spectral-norm distance between the orthogonal projectors onto two ranges."""
    if a.shape[1] != b.shape[1]:
        return math.inf
    if a.shape[1] == 0:
        return 0.0
    return float(np.linalg.norm(a @ a.conj().T - b @ b.conj().T, 2))
