"""Sparse homogeneous polynomials with the Hardy pairing of the polydisc.

Monomials ``z**alpha`` are orthonormal in H^2(D^d), so the inner product of
two polynomials is the plain l2 pairing of their coefficient maps.  Dense
coefficient vectors are indexed by graded-lex order (see :func:`monomials`).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

EPS_COEFF = 1e-12
EPS_NUM = 1e-9
EPS_UNIT = 1e-9

MultiIndex = tuple[int, ...]


class DimensionMismatch(ValueError):
    pass


# ---------------------------------------------------------------------------
# monomial bookkeeping


@lru_cache(maxsize=None)
def monomials(d: int, n: int) -> np.ndarray:
    """All exponent vectors of total degree ``n`` in ``d`` variables.

    Rows are in graded-lex order: ``(n, 0, ..., 0)`` first, lexicographically
    descending.  The returned array is read-only and shared.
    """
    if d < 1 or n < 0:
        raise ValueError(f"bad monomial space d={d}, n={n}")
    if d == 1:
        out = np.array([[n]], dtype=np.int64)
    else:
        blocks = []
        for a in range(n, -1, -1):
            tail = monomials(d - 1, n - a)
            head = np.full((tail.shape[0], 1), a, dtype=np.int64)
            blocks.append(np.hstack([head, tail]))
        out = np.vstack(blocks)
    out.setflags(write=False)
    return out


def space_dim(d: int, n: int) -> int:
    """Dimension C(n+d-1, d-1) of the degree-n homogeneous polynomials."""
    if n < 0:
        return 0
    return math.comb(n + d - 1, d - 1)


def _keys(exps: np.ndarray, base: int) -> np.ndarray:
    d = exps.shape[1]
    weights = base ** np.arange(d - 1, -1, -1, dtype=np.int64)
    return exps @ weights


@lru_cache(maxsize=None)
def _sorted_keys(d: int, n: int) -> np.ndarray:
    # graded-lex rows have strictly decreasing keys; negate for searchsorted
    return -_keys(monomials(d, n), n + 1)


def monomial_index(d: int, n: int, exps: np.ndarray) -> np.ndarray:
    """Row positions of the exponent vectors ``exps`` in ``monomials(d, n)``."""
    exps = np.asarray(exps, dtype=np.int64).reshape(-1, d)
    if exps.size and (exps.sum(axis=1) != n).any():
        raise ValueError("exponent of wrong degree")
    idx = np.searchsorted(_sorted_keys(d, n), -_keys(exps, n + 1))
    return idx


@lru_cache(maxsize=None)
def shift_matrix(d: int, n: int, i: int) -> sp.csr_matrix:
    """Matrix of multiplication by ``z_i`` from degree ``n`` into degree ``n+1``."""
    src = monomials(d, n)
    tgt = src.copy()
    tgt[:, i] += 1
    rows = monomial_index(d, n + 1, tgt)
    cols = np.arange(src.shape[0])
    m = sp.csr_matrix(
        (np.ones(src.shape[0]), (rows, cols)),
        shape=(space_dim(d, n + 1), space_dim(d, n)),
    )
    return m


# ---------------------------------------------------------------------------
# polynomial types


def _prune(terms: Mapping[MultiIndex, complex]) -> dict[MultiIndex, complex]:
    if not terms:
        return {}
    scale = max(abs(c) for c in terms.values())
    if scale == 0.0:
        return {}
    cut = EPS_COEFF * scale
    return {a: complex(c) for a, c in terms.items() if abs(c) > cut}


@dataclass(frozen=True)
class HPoly:
    """Homogeneous polynomial in ``dim`` variables, stored as a sparse term map.

    The zero polynomial has ``degree is None``.  Coefficients below
    ``EPS_COEFF`` times the largest one are dropped on construction.
    """

    dim: int
    terms: Mapping[MultiIndex, complex] = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        clean = {}
        for alpha, c in self.terms.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.dim:
                raise DimensionMismatch(
                    f"multi-index {alpha} has length {len(alpha)} != d={self.dim}"
                )
            if min(alpha) < 0:
                raise ValueError(f"negative exponent in {alpha}")
            clean[alpha] = clean.get(alpha, 0) + complex(c)
        clean = _prune(clean)
        degrees = {sum(a) for a in clean}
        if len(degrees) > 1:
            raise ValueError(f"polynomial is not homogeneous (degrees {sorted(degrees)})")
        object.__setattr__(self, "terms", clean)

    # construction helpers

    @classmethod
    def zero(cls, d: int) -> "HPoly":
        return cls(d, {})

    @classmethod
    def constant(cls, d: int, c: complex = 1.0) -> "HPoly":
        return cls(d, {(0,) * d: c})

    @classmethod
    def monomial(cls, alpha: Sequence[int], c: complex = 1.0) -> "HPoly":
        return cls(len(alpha), {tuple(alpha): c})

    @classmethod
    def coordinate(cls, d: int, i: int) -> "HPoly":
        """The coordinate function z_i (0-based ``i``)."""
        alpha = [0] * d
        alpha[i] = 1
        return cls(d, {tuple(alpha): 1.0})

    @classmethod
    def from_vector(cls, d: int, n: int, vec: np.ndarray) -> "HPoly":
        """Inverse of :meth:`to_vector` for a degree-``n`` coefficient vector."""
        exps = monomials(d, n)
        vec = np.asarray(vec)
        if vec.shape != (exps.shape[0],):
            raise ValueError(f"expected vector of length {exps.shape[0]}")
        nz = np.flatnonzero(vec)
        return cls(d, {tuple(exps[k]): vec[k] for k in nz})

    @property
    def degree(self) -> int | None:
        if not self.terms:
            return None
        return sum(next(iter(self.terms)))

    def is_zero(self) -> bool:
        return not self.terms

    def to_vector(self, n: int | None = None) -> np.ndarray:
        """Dense coefficient vector over the graded-lex monomials of degree ``n``."""
        if n is None:
            n = self.degree if self.degree is not None else 0
        out = np.zeros(space_dim(self.dim, n), dtype=complex)
        if not self.terms:
            return out
        if self.degree != n:
            raise ValueError(f"degree {self.degree} polynomial has no degree-{n} part")
        exps = np.array(list(self.terms), dtype=np.int64)
        out[monomial_index(self.dim, n, exps)] = list(self.terms.values())
        return out

    def norm(self) -> float:
        return math.sqrt(sum(abs(c) ** 2 for c in self.terms.values()))

    def __call__(self, *z: complex) -> complex:
        if len(z) != self.dim:
            raise DimensionMismatch(f"expected {self.dim} arguments")
        total = 0j
        for alpha, c in self.terms.items():
            term = c
            for zi, a in zip(z, alpha):
                term *= zi**a
            total += term
        return total

    # arithmetic

    def __add__(self, other: "HPoly") -> "HPoly":
        _check_dims(self, other)
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if self.degree != other.degree:
            raise ValueError("sum of homogeneous parts of different degree")
        terms = dict(self.terms)
        for a, c in other.terms.items():
            terms[a] = terms.get(a, 0) + c
        return HPoly(self.dim, terms)

    def __neg__(self) -> "HPoly":
        return self.scale(-1.0)

    def __sub__(self, other: "HPoly") -> "HPoly":
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, HPoly):
            return multiply(self, other)
        return self.scale(other)

    __rmul__ = __mul__

    def __truediv__(self, c: complex) -> "HPoly":
        return self.scale(1.0 / c)

    def __pow__(self, k: int) -> "HPoly":
        if k < 0:
            raise ValueError("negative power")
        out = HPoly.constant(self.dim)
        for _ in range(k):
            out = multiply(out, self)
        return out

    def scale(self, c: complex) -> "HPoly":
        return HPoly(self.dim, {a: c * v for a, v in self.terms.items()})

    def conj(self) -> "HPoly":
        return HPoly(self.dim, {a: v.conjugate() for a, v in self.terms.items()})

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for alpha in sorted(self.terms, reverse=True):
            mono = "*".join(
                f"z{i + 1}" + (f"^{a}" if a > 1 else "") for i, a in enumerate(alpha) if a
            )
            parts.append(f"({self.terms[alpha]:.6g})" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)


@dataclass(frozen=True)
class UniPoly:
    """One-variable polynomial ``sum c[k] z**k``; trailing zeros trimmed."""

    coefficients: tuple[complex, ...] = ()

    def __post_init__(self):
        coeffs = [complex(c) for c in self.coefficients]
        scale = max((abs(c) for c in coeffs), default=0.0)
        while coeffs and abs(coeffs[-1]) <= EPS_COEFF * scale:
            coeffs.pop()
        object.__setattr__(self, "coefficients", tuple(coeffs))

    @property
    def degree(self) -> int | None:
        return len(self.coefficients) - 1 if self.coefficients else None

    def __mul__(self, other: "UniPoly") -> "UniPoly":
        if not self.coefficients or not other.coefficients:
            return UniPoly()
        return UniPoly(tuple(np.convolve(self.coefficients, other.coefficients)))

    def derivative(self) -> "UniPoly":
        return UniPoly(tuple(k * c for k, c in enumerate(self.coefficients) if k > 0))

    def coefficient(self, k: int) -> complex:
        if 0 <= k < len(self.coefficients):
            return self.coefficients[k]
        return 0j


@dataclass(frozen=True)
class ThetaDirection:
    """Unimodular direction (theta_1, ..., theta_d) of a line through the origin."""

    theta: tuple[complex, ...]

    def __post_init__(self):
        theta = tuple(complex(t) for t in self.theta)
        if not theta:
            raise ValueError("empty direction")
        for i, t in enumerate(theta):
            if abs(abs(t) - 1.0) > EPS_UNIT:
                raise ValueError(f"theta[{i}] = {t} is not unimodular")
        object.__setattr__(self, "theta", theta)

    @classmethod
    def ones(cls, d: int) -> "ThetaDirection":
        return cls((1.0,) * d)

    @property
    def dim(self) -> int:
        return len(self.theta)

    def inverse(self) -> "ThetaDirection":
        return ThetaDirection(tuple(1 / t for t in self.theta))


def _check_dims(p: HPoly, q: HPoly) -> None:
    if p.dim != q.dim:
        raise DimensionMismatch(f"dimension mismatch: {p.dim} vs {q.dim}")


# ---------------------------------------------------------------------------
# operations


def hardy_inner(p: HPoly, q: HPoly) -> complex:
    """<p, q> in H^2(D^d), linear in ``p`` and conjugate-linear in ``q``."""
    _check_dims(p, q)
    if p.degree != q.degree:
        return 0j
    small, large = (p, q) if len(p.terms) <= len(q.terms) else (q, p)
    total = 0j
    for alpha in small.terms:
        if alpha in large.terms:
            total += p.terms[alpha] * q.terms[alpha].conjugate()
    return total


def multiply(p: HPoly, q: HPoly) -> HPoly:
    _check_dims(p, q)
    if p.is_zero() or q.is_zero():
        return HPoly.zero(p.dim)
    out: dict[MultiIndex, complex] = {}
    for a, ca in p.terms.items():
        for b, cb in q.terms.items():
            key = tuple(x + y for x, y in zip(a, b))
            out[key] = out.get(key, 0) + ca * cb
    return HPoly(p.dim, out)


def _falling(a: int, g: int) -> int:
    # a! / (a - g)!
    return math.perm(a, g)


def apply_diff(p: HPoly, f: HPoly) -> HPoly:
    """Apply the constant-coefficient operator p(d/dz) to ``f``."""
    _check_dims(p, f)
    out: dict[MultiIndex, complex] = {}
    for gamma, cp in p.terms.items():
        for alpha, cf in f.terms.items():
            if any(a < g for a, g in zip(alpha, gamma)):
                continue
            factor = math.prod(_falling(a, g) for a, g in zip(alpha, gamma))
            key = tuple(a - g for a, g in zip(alpha, gamma))
            out[key] = out.get(key, 0) + cp * cf * factor
    return HPoly(p.dim, out)


def make_pg(g: HPoly) -> HPoly:
    """The polynomial p_g with p_g(d/dz)* 1 = g.

    Its coefficient at ``gamma`` is ``conj(c_gamma) / gamma!`` so that
    ``apply_diff(f, make_pg(g)) == hardy_inner(f, g)`` for ``deg f == deg g``.
    """
    if g.is_zero():
        raise ValueError("p_g is undefined for g = 0")
    return HPoly(
        g.dim,
        {
            gamma: c.conjugate() / math.prod(math.factorial(x) for x in gamma)
            for gamma, c in g.terms.items()
        },
    )


def restrict(f: HPoly) -> UniPoly:
    """Restriction to the diagonal, f(z, ..., z)."""
    if f.is_zero():
        return UniPoly()
    n = f.degree
    coeffs = [0j] * (n + 1)
    coeffs[n] = sum(f.terms.values())
    return UniPoly(tuple(coeffs))


def r_g(g: HPoly, h: HPoly) -> UniPoly:
    """The functional r_g = r o p_g(d/dz) applied to ``h``."""
    return restrict(apply_diff(make_pg(g), h))


def root_of_unity_power(d: int, k: int) -> complex:
    """omega**k for omega = exp(2*pi*i/d), evaluated from the reduced angle."""
    k %= d
    if k == 0:
        return 1.0 + 0j
    if 2 * k == d:
        return -1.0 + 0j
    if 4 * k == d:
        return 1j
    if 4 * k == 3 * d:
        return -1j
    return cmath.exp(2j * math.pi * k / d)


def w_basis(d: int) -> list[HPoly]:
    """The linear forms w_i = sum_j omega^((i-1)(j-1)) z_j, i = 1..d."""
    if d < 2:
        raise ValueError("w-basis needs d >= 2")
    out = []
    for i in range(d):
        terms = {}
        for j in range(d):
            alpha = [0] * d
            alpha[j] = 1
            terms[tuple(alpha)] = root_of_unity_power(d, i * j)
        out.append(HPoly(d, terms))
    return out


def rotate(f: HPoly, theta: ThetaDirection) -> HPoly:
    """Composition with the diagonal unitary: coefficient at alpha times theta**alpha."""
    if theta.dim != f.dim:
        raise DimensionMismatch(f"theta has length {theta.dim}, polynomial d={f.dim}")
    out = {}
    for alpha, c in f.terms.items():
        factor = 1 + 0j
        for t, a in zip(theta.theta, alpha):
            factor *= t**a
        out[alpha] = c * factor
    return HPoly(f.dim, out)


def bergman_norm_sq(k: int, s: int) -> Fraction:
    """||z^k||^2 in the disc space with kernel (1 - conj(l) m)^-(s+2).

    Equals 1 / C(s+k+1, s+1); returned as an exact fraction.
    """
    if k < 0 or s < 0:
        raise ValueError("k and s must be non-negative")
    return Fraction(1, math.comb(s + k + 1, s + 1))


def bergman_derivative_pairing(u: UniPoly, v: UniPoly) -> complex:
    """<u', v'> in L^2_a(D) with normalized area measure, <z^m, z^n> = delta/(m+1)."""
    du, dv = u.derivative(), v.derivative()
    total = 0j
    for m, c in enumerate(du.coefficients):
        total += c * dv.coefficient(m).conjugate() / (m + 1)
    return total


def mult_matrix(p: HPoly, n: int) -> sp.csr_matrix:
    """Sparse matrix of multiplication by ``p`` from degree ``n`` to ``n + deg p``."""
    d = p.dim
    src = monomials(d, n)
    if p.is_zero():
        return sp.csr_matrix((space_dim(d, n), space_dim(d, n)), dtype=complex)
    k = p.degree
    rows, cols, vals = [], [], []
    col_idx = np.arange(src.shape[0])
    for beta, c in p.terms.items():
        rows.append(monomial_index(d, n + k, src + np.asarray(beta, dtype=np.int64)))
        cols.append(col_idx)
        vals.append(np.full(src.shape[0], c, dtype=complex))
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(space_dim(d, n + k), src.shape[0]),
    )


def random_hpoly(
    rng: np.random.Generator, d: int, n: int, density: float = 1.0
) -> HPoly:
    """Random homogeneous polynomial with complex Gaussian coefficients."""
    exps = monomials(d, n)
    vec = rng.standard_normal(exps.shape[0]) + 1j * rng.standard_normal(exps.shape[0])
    if density < 1.0:
        vec[rng.random(exps.shape[0]) > density] = 0
        if not vec.any():
            vec[0] = 1.0
    return HPoly.from_vector(d, n, vec)


def gram(polys: Iterable[HPoly]) -> np.ndarray:
    polys = list(polys)
    return np.array([[hardy_inner(p, q) for q in polys] for p in polys])
