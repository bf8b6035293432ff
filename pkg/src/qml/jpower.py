"""Explicit structure of the quotient of the n-th power of the diagonal ideal.

The quotient of ``J^N`` splits as an orthogonal sum, over an orthonormal basis
``g`` of each ``J_n = span{w^alpha : |alpha| = n, alpha_1 = 0}`` (n < N), of
one-dimensional-per-degree pieces.  The piece attached to ``g`` is spanned by
the Taylor coefficients

    e_k(g) = sum_gamma c_gamma sum_{|alpha| = k} prod_i C(alpha_i + gamma_i, gamma_i) z^(alpha + gamma)

of ``p_g(d/dz)* K_lambda`` in ``conj(lambda)``.  ``r_g`` sends ``e_k(g)`` to
``C(s + k + 1, k) z^k`` with ``s = d + 2n - 2``, so ``||e_k(g)||^2 = C(s + k + 1, k)``.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .poly import HPoly, gram, monomial_index, monomials, multiply, space_dim, w_basis


def w_power(d: int, alpha) -> HPoly:
    ws = w_basis(d)
    out = HPoly.constant(d)
    for w, a in zip(ws, alpha):
        for _ in range(int(a)):
            out = multiply(out, w)
    return out


@lru_cache(maxsize=None)
def j_generators(d: int, n: int) -> tuple[HPoly, ...]:
    """``w^alpha`` for ``|alpha| = n``, ``alpha_1 = 0``, in graded-lex order of alpha."""
    return tuple(w_power(d, a) for a in monomials(d, n) if a[0] == 0)


@lru_cache(maxsize=None)
def b_basis(d: int, n: int) -> tuple[HPoly, ...]:
    """Orthonormal basis of ``J_n`` by Cholesky orthonormalization in graded-lex order."""
    gens = j_generators(d, n)
    G = gram(gens)
    L = np.linalg.cholesky(G)
    X = np.linalg.inv(L).conj().T
    out = []
    for j in range(len(gens)):
        acc: dict = {}
        for i, p in enumerate(gens):
            if X[i, j] == 0:
                continue
            for a, c in p.terms.items():
                acc[a] = acc.get(a, 0) + X[i, j] * c
        out.append(HPoly(d, acc))
    return tuple(out)


def b_union(d: int, N: int) -> list[tuple[int, HPoly]]:
    """All ``(n, g)`` with ``g`` in the basis of ``J_n``, ``n < N``."""
    return [(n, g) for n in range(N) for g in b_basis(d, n)]


def kernel_vector_array(g: HPoly, k: int) -> np.ndarray:
    """Coefficient vector of ``e_k(g)`` over the degree ``deg g + k`` monomials."""
    d, n = g.dim, g.degree
    alphas = monomials(d, k)
    out = np.zeros(space_dim(d, n + k), dtype=complex)
    for gamma, c in g.terms.items():
        weights = np.ones(alphas.shape[0])
        for i, gi in enumerate(gamma):
            # C(a + gi, gi) as a running product, exact in floating point at these sizes
            for j in range(1, gi + 1):
                weights *= (alphas[:, i] + j) / j
        idx = monomial_index(d, n + k, alphas + np.asarray(gamma, dtype=alphas.dtype))
        np.add.at(out, idx, c * weights)
    return out


def kernel_vector(g: HPoly, k: int) -> HPoly:
    """Degree-k Taylor coefficient ``e_k(g)`` of ``p_g(d/dz)* K_lambda`` (unnormalized)."""
    return HPoly.from_vector(g.dim, g.degree + k, kernel_vector_array(g, k))


def kernel_norm_sq(d: int, n: int, k: int) -> int:
    """``||e_k(g)||^2`` predicted by the weighted-Bergman isometry, ``C(d + 2n - 1 + k, k)``."""
    s = d + 2 * n - 2
    return math.comb(s + k + 1, k)


def unit_kernel_vector(g: HPoly, n: int, k: int) -> HPoly:
    e = kernel_vector(g, k)
    return e / math.sqrt(kernel_norm_sq(g.dim, n, k))


def a_coefficient(d: int, m: int, n: int, k: int) -> float:
    """Off-diagonal shift weight a_{m,n}(k), as printed (negative)."""
    top = math.comb(d + 2 * n + k - 1, d + m + n - 2)
    if top == 0:
        return 0.0
    return -top / math.sqrt(
        math.comb(d + 2 * n + k - 1, d + 2 * n - 1) * math.comb(d + n + m + k, d + 2 * m - 1)
    )


def b_coefficient(d: int, m: int, n: int, k: int) -> float:
    """Commutator weight b_{m,n}(k) built from consecutive a-terms."""
    return a_coefficient(d, m, n, k) * math.sqrt((k - m + n + 1) / (d + m + n + k)) - a_coefficient(
        d, m, n, k - 1
    ) * math.sqrt(k / (d + 2 * n + k - 1))


def diagonal_weight(d: int, m: int, k: int) -> float:
    """``||z^(k+1)|| / ||z^k||`` in the weight-(d + 2m - 2) space."""
    return math.sqrt((k + 1) / (d + 2 * m + k))


def model_basis(frame, d: int, N: int, degree: int) -> tuple[np.ndarray, list[tuple[int, int]]]:
    """Frame coordinates of the unit kernel vectors at one polynomial degree.

    Columns follow ``b_union`` order, skipping ``g`` with ``deg g > degree``.
    Returns the matrix and the ``(n, index-in-B_n)`` label of each column.
    """
    cols, labels = [], []
    for n in range(N):
        if n > degree:
            break
        for j, g in enumerate(b_basis(d, n)):
            vec = kernel_vector_array(g, degree - n) / math.sqrt(kernel_norm_sq(d, n, degree - n))
            cols.append(frame.columns(degree).conj().T @ vec)
            labels.append((n, j))
    return np.column_stack(cols), labels


def model_shift(frame, d: int, N: int):
    """The isometry sending each unit kernel vector of degree k to its degree-(k+1) successor."""
    from .compress import BlockOperator

    blocks = {}
    U = [model_basis(frame, d, N, k)[0] for k in range(frame.D + 1)]
    for k in range(frame.D):
        # successors of the degree-k vectors are the leading columns at k+1
        blocks[(k, k + 1)] = U[k + 1][:, : U[k].shape[1]] @ U[k].conj().T
    return BlockOperator(frame, blocks, label="S_model")
