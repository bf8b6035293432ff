"""Per-degree spectra, decay fits and weak-trace-class evidence for block operators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .compress import BlockOperator, QuotientFrame, compress_coordinate, identity


@dataclass
class SpectralProfile:
    """Singular values (descending) and traces of each block, keyed by source degree."""

    degrees: list[int]
    singular_values: dict[int, np.ndarray]
    trusted: dict[int, bool]
    traces: dict[int, complex] = field(default_factory=dict)
    eigenvalues: dict[int, np.ndarray] = field(default_factory=dict)

    @property
    def trusted_degrees(self) -> list[int]:
        return [n for n in self.degrees if self.trusted[n]]

    def cumulative_trace(self) -> dict[int, complex]:
        out, acc = {}, 0j
        for n in self.trusted_degrees:
            acc += self.traces.get(n, 0j)
            out[n] = acc
        return out

    def cumulative_abs(self) -> dict[int, float]:
        out, acc = {}, 0.0
        for n in self.trusted_degrees:
            acc += float(self.singular_values[n].sum())
            out[n] = acc
        return out

    def block_norms(self) -> dict[int, float]:
        return {
            n: float(s[0]) if s.size else 0.0
            for n, s in self.singular_values.items()
            if self.trusted[n]
        }

    def rows(self) -> list[tuple[int, int, float, bool]]:
        """``(degree, index, singular_value, trusted)`` rows for CSV export."""
        out = []
        for n in self.degrees:
            for i, s in enumerate(self.singular_values[n]):
                out.append((n, i, float(s), self.trusted[n]))
        return out


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    r_squared: float
    window: tuple[int, int]
    prefactor: float


def profile(op: BlockOperator) -> SpectralProfile:
    """SVD of every block; traces and Hermitian spectra for diagonal blocks."""
    degrees = sorted({m for m, _ in op.blocks})
    svals: dict[int, np.ndarray] = {}
    trusted: dict[int, bool] = {}
    traces: dict[int, complex] = {}
    eigs: dict[int, np.ndarray] = {}
    for m in degrees:
        keys = [k for k in op.blocks if k[0] == m]
        blocks = [op.blocks[k] for k in sorted(keys)]
        stacked = np.vstack(blocks) if blocks else np.zeros((0, 0))
        svals[m] = (
            np.linalg.svd(stacked, compute_uv=False) if stacked.size else np.zeros(0)
        )
        trusted[m] = all(op.trusted[k] for k in keys)
        diag = op.blocks.get((m, m))
        if diag is not None:
            traces[m] = complex(np.trace(diag))
            if diag.size and np.allclose(diag, diag.conj().T, atol=1e-12):
                eigs[m] = np.linalg.eigvalsh(diag)[::-1]
    return SpectralProfile(degrees, svals, trusted, traces, eigs)


def fit_decay(
    values: Mapping[int, float] | Sequence[float],
    window: tuple[int, int] | None = None,
) -> DecayFit:
    """Least-squares power law ``value ~ C k^-p`` on a log-log scale.

    ``values`` is either a mapping ``k -> value`` or a sequence indexed from 0.
    The default window is ``[max(5, kmax // 4), kmax]``.
    """
    if not isinstance(values, Mapping):
        values = dict(enumerate(values))
    ks_all = sorted(values)
    if window is None:
        kmax = ks_all[-1]
        window = (max(5, kmax // 4), kmax)
    lo, hi = window
    if lo < 1:
        raise ValueError("window must start at k >= 1")
    ks = np.array([k for k in ks_all if lo <= k <= hi], dtype=float)
    ys = np.array([values[int(k)] for k in ks], dtype=float)
    if ks.size < 2:
        raise ValueError(f"window {window} holds fewer than two points")
    if (ys <= 0).any():
        bad = [int(k) for k, y in zip(ks, ys) if y <= 0]
        raise ValueError(f"non-positive values at k = {bad[:5]}")
    x, y = np.log(ks), np.log(ys)
    slope, icpt = np.polyfit(x, y, 1)
    resid = y - (slope * x + icpt)
    ss_tot = ((y - y.mean()) ** 2).sum()
    r2 = 1.0 - (resid**2).sum() / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(-slope), float(r2), (int(ks[0]), int(ks[-1])), float(math.exp(icpt)))


def default_window(D: int) -> tuple[int, int]:
    return (max(5, D // 4), D - 2)


def schatten_1inf_indicator(prof: SpectralProfile) -> tuple[float, dict[int, float]]:
    """Partial singular-value sums over ``log(2 + count)``, per truncation level.

    Returns the maximum over trusted levels and the full table.  A table that
    stays bounded as ``D`` grows is consistent with weak trace class.
    """
    table: dict[int, float] = {}
    acc, count = 0.0, 0
    for n in prof.trusted_degrees:
        s = prof.singular_values[n]
        acc += float(s.sum())
        count += int(s.size)
        table[n] = acc / math.log(2 + count)
    return max(table.values(), default=0.0), table


def plateau_verdict(table: Mapping[int, float], growth_tol: float = 0.02) -> str:
    """Textual verdict from the top half of an indicator table."""
    ks = sorted(table)
    if len(ks) < 4:
        return "insufficient data"
    top = [table[k] for k in ks[len(ks) // 2 :]]
    rel_growth = (top[-1] - top[0]) / max(abs(top[0]), 1e-300)
    if rel_growth > growth_tol:
        return f"not (1,inf)-consistent at this truncation (D = {ks[-1]})"
    return f"consistent with (1,inf) at D = {ks[-1]}"


def probe_operator(lam: Sequence[complex], frame: QuotientFrame) -> BlockOperator:
    """T = sum_i (lambda_i - S_i)(lambda_i - S_i)* on the frame."""
    if len(lam) != frame.dim:
        raise ValueError(f"lambda has {len(lam)} entries, frame d={frame.dim}")
    ident = identity(frame)
    total = None
    for i, li in enumerate(lam):
        x = ident * complex(li) - compress_coordinate(i, frame)
        term = x @ x.adjoint()
        total = term if total is None else total + term
    return total


def essential_spectrum_probe(
    lam: Sequence[complex], frame: QuotientFrame, tail_start: int
) -> float:
    """Smallest eigenvalue of T compressed to degrees ``tail_start .. D-1``."""
    if tail_start + 2 > frame.D:
        raise ValueError(f"tail_start {tail_start} too close to D = {frame.D}")
    T = probe_operator(lam, frame)
    window = list(range(tail_start, frame.D))
    mat = T.dense(window)
    mat = 0.5 * (mat + mat.conj().T)
    return float(np.linalg.eigvalsh(mat)[0])
