"""Truncated quotient frames and compressed multipliers as graded block operators.

A :class:`QuotientFrame` holds orthonormal bases of the quotient components
for degrees ``0..D``.  Operators between frame coordinates are stored block by
block, keyed by ``(source_degree, target_degree)``.  Multiplication by a
homogeneous polynomial maps degree n into degree n + deg p with no leakage,
so every block of a compressed multiplier that fits under ``D`` is exact.
Blocks of composite operators that would need degrees above ``D`` are kept
but flagged untrusted.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .ideal import DegreeBasis, _GradedBase
from .poly import HPoly, mult_matrix, shift_matrix

_frame_ids = itertools.count()


class FrameMismatch(ValueError):
    pass


class DegreeBudgetError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class QuotientFrame:
    ideal: _GradedBase
    D: int
    bases: tuple[DegreeBasis, ...]
    uid: int = field(default_factory=lambda: next(_frame_ids))

    @property
    def dim(self) -> int:
        return self.ideal.dim

    def dims(self) -> list[int]:
        return [b.dim for b in self.bases]

    def columns(self, n: int) -> np.ndarray:
        return self.bases[n].columns

    def coordinates(self, h: HPoly) -> np.ndarray:
        """Frame coordinates of the quotient projection of ``h``."""
        n = h.degree
        if n is None or n > self.D:
            raise DegreeBudgetError(f"degree {n} outside frame 0..{self.D}")
        return self.columns(n).conj().T @ h.to_vector(n)


def build_frame(ideal: _GradedBase, D: int) -> QuotientFrame:
    if D < 1:
        raise ValueError("truncation degree must be >= 1")
    bases = tuple(ideal.quotient_component(n) for n in range(D + 1))
    return QuotientFrame(ideal, D, bases)


class BlockOperator:
    """Graded block matrix on a quotient frame.

    ``blocks[(m, n)]`` maps frame coordinates at degree ``m`` to degree ``n``.
    ``trusted[(m, n)]`` is False where truncation at ``D`` dropped a term.
    """

    def __init__(
        self,
        frame: QuotientFrame,
        blocks: dict[tuple[int, int], np.ndarray],
        trusted: dict[tuple[int, int], bool] | None = None,
        label: str = "",
    ):
        self.frame = frame
        self.blocks = dict(blocks)
        self.trusted = {k: True for k in self.blocks}
        if trusted:
            self.trusted.update(trusted)
        self.label = label
        dims = frame.dims()
        for (m, n), b in self.blocks.items():
            if b.shape != (dims[n], dims[m]):
                raise ValueError(f"block {(m, n)} has shape {b.shape}, expected {(dims[n], dims[m])}")

    # structure

    @property
    def shifts(self) -> set[int]:
        return {n - m for m, n in self.blocks}

    @property
    def shift(self) -> int | None:
        s = self.shifts
        return s.pop() if len(s) == 1 else None

    def block(self, m: int, shift: int | None = None) -> np.ndarray | None:
        s = self.shift if shift is None else shift
        return self.blocks.get((m, m + s))

    def is_degree_preserving(self) -> bool:
        return all(m == n for m, n in self.blocks)

    def trusted_keys(self) -> list[tuple[int, int]]:
        return sorted(k for k, ok in self.trusted.items() if ok)

    def _check(self, other: "BlockOperator") -> None:
        if other.frame is not self.frame:
            raise FrameMismatch("operators live on different frames")

    # algebra

    def adjoint(self) -> "BlockOperator":
        return BlockOperator(
            self.frame,
            {(n, m): b.conj().T for (m, n), b in self.blocks.items()},
            {(n, m): t for (m, n), t in self.trusted.items()},
            label=f"{self.label}*",
        )

    def __matmul__(self, other: "BlockOperator") -> "BlockOperator":
        """Composition ``self o other`` on the truncated frame."""
        self._check(other)
        D = self.frame.D
        dims = self.frame.dims()
        blocks: dict[tuple[int, int], np.ndarray] = {}
        trusted: dict[tuple[int, int], bool] = {}
        for sb in other.shifts:
            for sa in self.shifts:
                for m in range(D + 1):
                    mid, tgt = m + sb, m + sb + sa
                    if not 0 <= tgt <= D or mid < 0:
                        continue
                    key = (m, tgt)
                    if mid > D:
                        blocks.setdefault(key, np.zeros((dims[tgt], dims[m]), dtype=complex))
                        trusted[key] = False
                        continue
                    b = other.blocks.get((m, mid))
                    a = self.blocks.get((mid, tgt))
                    if a is None or b is None:
                        continue
                    prod = a @ b
                    ok = other.trusted[(m, mid)] and self.trusted[(mid, tgt)]
                    if key in blocks:
                        blocks[key] = blocks[key] + prod
                        trusted[key] = trusted[key] and ok
                    else:
                        blocks[key] = prod
                        trusted[key] = ok
        return BlockOperator(self.frame, blocks, trusted, label=f"{self.label}{other.label}")

    def _combine(self, other: "BlockOperator", sign: float) -> "BlockOperator":
        self._check(other)
        blocks = dict(self.blocks)
        trusted = dict(self.trusted)
        for k, b in other.blocks.items():
            if k in blocks:
                blocks[k] = blocks[k] + sign * b
                trusted[k] = trusted[k] and other.trusted[k]
            else:
                blocks[k] = sign * b
                trusted[k] = other.trusted[k]
        return BlockOperator(self.frame, blocks, trusted)

    def __add__(self, other: "BlockOperator") -> "BlockOperator":
        return self._combine(other, 1.0)

    def __sub__(self, other: "BlockOperator") -> "BlockOperator":
        return self._combine(other, -1.0)

    def __mul__(self, c: complex) -> "BlockOperator":
        return BlockOperator(
            self.frame, {k: c * b for k, b in self.blocks.items()}, self.trusted, self.label
        )

    __rmul__ = __mul__

    # measurements

    def block_norms(self, trusted_only: bool = True) -> dict[tuple[int, int], float]:
        out = {}
        for k, b in sorted(self.blocks.items()):
            if trusted_only and not self.trusted[k]:
                continue
            out[k] = float(np.linalg.norm(b, 2)) if b.size else 0.0
        return out

    def norm(self) -> float:
        """Largest trusted block singular value (exact norm for single-shift operators)."""
        norms = self.block_norms()
        return max(norms.values(), default=0.0)

    def dense(self, degrees: Sequence[int]) -> np.ndarray:
        """Dense matrix of the compression to the listed degrees."""
        dims = self.frame.dims()
        offsets = np.concatenate([[0], np.cumsum([dims[n] for n in degrees])])
        pos = {n: i for i, n in enumerate(degrees)}
        out = np.zeros((offsets[-1], offsets[-1]), dtype=complex)
        for (m, n), b in self.blocks.items():
            if m in pos and n in pos:
                i, j = pos[n], pos[m]
                out[offsets[i] : offsets[i + 1], offsets[j] : offsets[j + 1]] = b
        return out

    def __repr__(self) -> str:
        return f"BlockOperator({self.label!r}, shifts={sorted(self.shifts)}, blocks={len(self.blocks)})"


def compress_multiplier(p: HPoly, frame: QuotientFrame, label: str = "") -> BlockOperator:
    """S_p = P M_p restricted to the quotient, one exact block per source degree."""
    if p.dim != frame.dim:
        raise ValueError("dimension mismatch")
    if p.is_zero():
        return BlockOperator(frame, {}, label=label or "0")
    k = p.degree
    blocks = {}
    for n in range(frame.D - k + 1):
        q_src = frame.columns(n)
        q_tgt = frame.columns(n + k)
        if k == 1 and len(p.terms) == 1:
            (alpha, c), = p.terms.items()
            moved = c * (shift_matrix(p.dim, n, alpha.index(1)) @ q_src)
        else:
            moved = mult_matrix(p, n) @ q_src
        blocks[(n, n + k)] = q_tgt.conj().T @ moved
    return BlockOperator(frame, blocks, label=label or f"S[{p}]")


def compress_coordinate(i: int, frame: QuotientFrame) -> BlockOperator:
    return compress_multiplier(HPoly.coordinate(frame.dim, i), frame, label=f"S_z{i + 1}")


def commutator(a: BlockOperator, b: BlockOperator) -> BlockOperator:
    """[A*, B] = A* B - B A*."""
    ad = a.adjoint()
    out = (ad @ b) - (b @ ad)
    out.label = f"[{a.label}*,{b.label}]"
    return out


def commutator_blocks(i: int, j: int, frame: QuotientFrame) -> BlockOperator:
    """[S_{z_i}*, S_{z_j}] on the frame; the top-degree block is untrusted."""
    return commutator(compress_coordinate(i, frame), compress_coordinate(j, frame))


def compress_general(f: HPoly | Iterable[HPoly], frame: QuotientFrame) -> BlockOperator:
    """Compression of a sum of homogeneous parts."""
    parts = [f] if isinstance(f, HPoly) else list(f)
    bad = sorted({p.degree for p in parts if p.degree is not None and p.degree > frame.D})
    if bad:
        raise DegreeBudgetError(f"parts of degree {bad} exceed frame degree {frame.D}")
    total: BlockOperator | None = None
    for p in parts:
        op = compress_multiplier(p, frame)
        total = op if total is None else total + op
    if total is None:
        return BlockOperator(frame, {}, label="0")
    total.label = "S_f"
    return total


def identity(frame: QuotientFrame) -> BlockOperator:
    return BlockOperator(
        frame, {(n, n): np.eye(b.dim, dtype=complex) for n, b in enumerate(frame.bases)}, label="I"
    )
