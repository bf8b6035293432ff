"""Closed-form predictions checked against brute-force quotient computations.

Each ``verify_*`` function builds its own frame, computes the quantity the
hard way, compares with the formula, and returns a :class:`VerificationReport`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from . import jpower
from .compress import (
    build_frame,
    commutator,
    compress_coordinate,
    compress_general,
    compress_multiplier,
)
from .ideal import IdealIntersection, _GradedBase, j_power
from .poly import (
    HPoly,
    ThetaDirection,
    bergman_derivative_pairing,
    hardy_inner,
    monomials,
    multiply,
    r_g,
    random_hpoly,
    restrict,
)
from .spectral import fit_decay, profile, schatten_1inf_indicator

TOL_EQUALITY = 1e-9
TOL_TRACE = 1e-6
TOL_EXPONENT = 0.2


@dataclass
class VerificationReport:
    claim: str
    predicted: Any
    computed: Any
    abs_error: float
    rel_error: float
    tolerance: float
    status: str  # "pass", "fail" or "n/a"
    config: dict
    verdict: str = ""
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status != "fail"


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


def _rel(err: float, ref: float) -> float:
    return err / abs(ref) if abs(ref) > 0 else (0.0 if err == 0 else math.inf)


# ---------------------------------------------------------------------------
# trace formula


def extrapolate_partial_sums(partial: Sequence[complex], order: int = 8, window: int = 20) -> complex:
    """Limit of partial sums ``T(K)`` by a polynomial fit in ``1/(K+1)``.

    Uses the last ``window`` values; the order is reduced when fewer points are
    available so that the fit stays overdetermined.
    """
    partial = np.asarray(partial, dtype=complex)
    K = np.arange(partial.size)
    window = min(window, partial.size)
    order = max(0, min(order, window - 4))
    sel = K[-window:]
    x = 1.0 / (sel + 1)
    x = x / x.max()
    V = np.vander(x, order + 1)
    coef, *_ = np.linalg.lstsq(V, partial[sel], rcond=None)
    return complex(coef[-1])


def commutator_partial_traces(f1: HPoly, f2: HPoly, frame) -> np.ndarray:
    """Cumulative traces of [S_f1*, S_f2] over degrees ``0 .. D - max deg - 1``."""
    K = frame.D - max(f1.degree, f2.degree) - 1
    if f1.degree != f2.degree:
        # a degree-shifting operator has zero diagonal blocks
        return np.zeros(K + 1, dtype=complex)
    C = commutator(compress_multiplier(f1, frame), compress_multiplier(f2, frame))
    diag = [np.trace(C.blocks[(n, n)]) for n in range(K + 1)]
    return np.cumsum(diag)


def verify_trace_formula(
    d: int,
    N: int,
    f1: HPoly,
    f2: HPoly,
    D: int,
    tol: float = TOL_TRACE,
    theta: ThetaDirection | None = None,
) -> VerificationReport:
    """tr[S_f1*, S_f2] on the quotient of J^N against C(d+N-2, d-1) <(r f2)', (r f1)'>."""
    for f in (f1, f2):
        if f.is_zero() or f.degree < 1:
            raise ValueError("trace formula needs homogeneous f of degree >= 1")
    if D < f1.degree + f2.degree + 5:
        raise ValueError(f"degree budget: need D >= {f1.degree + f2.degree + 5}, got {D}")
    frame = build_frame(j_power(d, N, theta), D)
    partial = commutator_partial_traces(f1, f2, frame)
    computed = extrapolate_partial_sums(partial)
    earlier = extrapolate_partial_sums(partial[:-5])
    tail = abs(computed - earlier)
    predicted = math.comb(d + N - 2, d - 1) * bergman_derivative_pairing(restrict(f2), restrict(f1))
    err = abs(computed - predicted)
    return VerificationReport(
        claim="trace-formula",
        predicted=complex(predicted),
        computed=computed,
        abs_error=err,
        rel_error=_rel(err, predicted),
        tolerance=tol,
        status=_status(err <= tol + tail),
        config={"d": d, "N": N, "D": D, "f1": str(f1), "f2": str(f2),
                "theta": None if theta is None else list(theta.theta)},
        details={
            "raw_partial_trace": complex(partial[-1]),
            "tail_estimate": tail,
            "partial_traces": [complex(t) for t in partial],
        },
    )


# ---------------------------------------------------------------------------
# shift coefficients and zero blocks


def model_bases(frame, d: int, N: int):
    return [jpower.model_basis(frame, d, N, t) for t in range(frame.D + 1)]


def shift_matrix_elements(frame, d: int, N: int, i: int, bases=None) -> list[tuple[np.ndarray, list, list]]:
    """For each degree t < D, the matrix <S_{z_i} u_g, u_f> between unit kernel vectors.

    Returns ``(matrix, source_labels, target_labels)`` per degree; entry
    ``[row, col]`` pairs ``target_labels[row]`` with ``source_labels[col]``.
    ``bases`` may carry precomputed ``model_basis`` output for every degree.
    """
    S = compress_coordinate(i, frame)
    if bases is None:
        bases = model_bases(frame, d, N)
    out = []
    for t in range(frame.D):
        U_src, lab_src = bases[t]
        U_tgt, lab_tgt = bases[t + 1]
        out.append((U_tgt.conj().T @ S.block(t) @ U_src, lab_src, lab_tgt))
    return out


def shift_prediction(d: int, m: int, n: int, i: int, f: HPoly, g: HPoly, k: int, sign: str) -> complex:
    zi = HPoly.coordinate(d, i)
    pairing = hardy_inner(multiply(zi ** (m - n), g), f)
    value = jpower.a_coefficient(d, m, n, k) * pairing
    if sign == "corrected":
        value *= (-1) ** (m - n)
    elif sign != "literal":
        raise ValueError(f"unknown sign convention {sign!r}")
    return value


def verify_shift_coefficients(
    d: int,
    N: int,
    m: int,
    n: int,
    i: int,
    f: HPoly | int,
    g: HPoly | int,
    k_max: int,
    tol: float = 1e-8,
    sign: str = "corrected",
) -> VerificationReport:
    """Matrix elements of S_{z_i} from the g-piece into the f-piece against a_{m,n}(k).

    ``f``/``g`` may be given as indices into the orthonormal bases of ``J_m``/``J_n``.
    ``sign="literal"`` compares with the printed coefficient; ``"corrected"``
    includes the factor ``(-1)^(m-n)`` from the degree parity of f and g.
    """
    if sign not in ("literal", "corrected"):
        raise ValueError(f"unknown sign convention {sign!r}")
    if m <= n:
        raise ValueError("m <= n is the zero-block claim; use verify_zero_blocks")
    if not 0 <= n < m <= N - 1:
        raise ValueError(f"need 0 <= n < m <= N-1, got m={m}, n={n}, N={N}")
    if isinstance(f, int):
        f = jpower.b_basis(d, m)[f]
    if isinstance(g, int):
        g = jpower.b_basis(d, n)[g]
    D = n + k_max + 1
    frame = build_frame(j_power(d, N), D)
    S = compress_coordinate(i, frame)
    brute, pred_lit, pred_cor = [], [], []
    for k in range(k_max + 1):
        kp = k - m + n + 1
        ug = frame.coordinates(jpower.unit_kernel_vector(g, n, k))
        if kp < 0:
            val = 0j
        else:
            uf = frame.coordinates(jpower.unit_kernel_vector(f, m, kp))
            val = complex(uf.conj() @ S.block(n + k) @ ug)
        brute.append(val)
        pred_lit.append(shift_prediction(d, m, n, i, f, g, k, "literal"))
        pred_cor.append(shift_prediction(d, m, n, i, f, g, k, "corrected"))
    brute = np.array(brute)
    err_lit = float(np.abs(brute - np.array(pred_lit)).max())
    err_cor = float(np.abs(brute - np.array(pred_cor)).max())
    err_mag = float(np.abs(np.abs(brute) - np.abs(pred_lit)).max())
    err = err_cor if sign == "corrected" else err_lit
    predicted = pred_cor if sign == "corrected" else pred_lit
    ks = range(20, 201)
    afit = fit_decay({k: abs(jpower.a_coefficient(d, m, n, k)) for k in ks}, (20, 200))
    ref = float(np.abs(predicted).max())
    return VerificationReport(
        claim="shift-coeffs",
        predicted=[complex(p) for p in predicted],
        computed=[complex(b) for b in brute],
        abs_error=err,
        rel_error=_rel(err, ref),
        tolerance=tol,
        status=_status(err <= tol),
        config={"d": d, "N": N, "m": m, "n": n, "i": i, "k_max": k_max, "sign": sign,
                "f": str(f), "g": str(g)},
        details={
            "max_error_literal_sign": err_lit,
            "max_error_corrected_sign": err_cor,
            "max_error_magnitude": err_mag,
            "a_decay_exponent": afit.exponent,
            "a_decay_window": list(afit.window),
        },
    )


def verify_zero_blocks(
    d: int, N: int, i: int | None, D: int, tol: float = TOL_EQUALITY
) -> VerificationReport:
    """max |<S_{z_i} u_g, u_f>| over f in B_m, g in B_n, m <= n, f != g."""
    config = {"d": d, "N": N, "i": i, "D": D}
    if N < 2:
        return VerificationReport("zero-blocks", 0.0, 0.0, 0.0, 0.0, tol, "pass", config,
                                  verdict="vacuous: a single basis element")
    frame = build_frame(j_power(d, N), D)
    coords = range(d) if i is None else [i]
    bases = model_bases(frame, d, N)
    worst = 0.0
    per_coord = {}
    count = 0
    for c in coords:
        cw = 0.0
        for mat, lab_src, lab_tgt in shift_matrix_elements(frame, d, N, c, bases):
            for r, (m, jf) in enumerate(lab_tgt):
                for s, (n, jg) in enumerate(lab_src):
                    if m <= n and (m, jf) != (n, jg):
                        cw = max(cw, abs(mat[r, s]))
                        count += 1
        per_coord[c] = cw
        worst = max(worst, cw)
    return VerificationReport(
        claim="zero-blocks",
        predicted=0.0,
        computed=worst,
        abs_error=worst,
        rel_error=worst,
        tolerance=tol,
        status=_status(worst <= tol),
        config=config,
        details={"max_by_coordinate": per_coord, "pairs_checked": count},
    )


# ---------------------------------------------------------------------------
# module map


def verify_rg_module_map(
    d: int,
    N: int,
    f: HPoly | None,
    samples: int,
    seed: int = 0,
    max_f_degree: int = 3,
    max_k: int = 6,
    tol: float = TOL_EQUALITY,
) -> VerificationReport:
    """r_g(f h) = r(f) r_g(h) for h in the g-piece of the quotient of J^N.

    Each sample draws ``g`` from the bases of ``J_n`` (n < N), a degree ``k``,
    ``h`` = the frame-realized unit kernel vector times a random scalar, and
    (when ``f`` is None) a random homogeneous ``f``.
    """
    rng = np.random.default_rng(seed)
    pieces = jpower.b_union(d, N)
    frame = build_frame(j_power(d, N), N + max_k)
    worst = 0.0
    worst_rel = 0.0
    for _ in range(samples):
        n, g = pieces[rng.integers(len(pieces))]
        k = int(rng.integers(0, max_k + 1))
        fs = f if f is not None else random_hpoly(rng, d, int(rng.integers(0, max_f_degree + 1)))
        u = jpower.unit_kernel_vector(g, n, k)
        cols = frame.columns(n + k)
        realized = cols @ (cols.conj().T @ u.to_vector())
        scale = complex(rng.standard_normal(), rng.standard_normal())
        h = HPoly.from_vector(d, n + k, scale * realized)
        lhs = r_g(g, multiply(fs, h))
        rhs = restrict(fs) * r_g(g, h)
        top = max(len(lhs.coefficients), len(rhs.coefficients))
        diff = max(
            (abs(lhs.coefficient(j) - rhs.coefficient(j)) for j in range(top)), default=0.0
        )
        ref = max((abs(c) for c in rhs.coefficients), default=0.0)
        worst = max(worst, diff)
        worst_rel = max(worst_rel, diff / max(1.0, ref))
    return VerificationReport(
        claim="module-map",
        predicted="r(f) r_g(h)",
        computed="r_g(f h)",
        abs_error=worst,
        rel_error=worst_rel,
        tolerance=tol,
        status=_status(worst_rel <= tol),
        config={"d": d, "N": N, "samples": samples, "seed": seed,
                "f": None if f is None else str(f)},
    )


# ---------------------------------------------------------------------------
# asymptotic orthogonality


def _linear_form(theta: ThetaDirection) -> HPoly:
    # g(z) = <z, theta>
    d = theta.dim
    return HPoly(d, {tuple(int(j == l) for j in range(d)): theta.theta[l].conjugate() for l in range(d)})


def kernel_coefficient(theta: ThetaDirection, k: int) -> HPoly:
    """Degree-k Taylor part of the reproducing kernel at ``lambda * theta``, sum conj(theta)^alpha z^alpha."""
    d = theta.dim
    terms = {}
    for a in monomials(d, k):
        c = 1 + 0j
        for t, e in zip(theta.theta, a):
            c *= t.conjugate() ** int(e)
        terms[tuple(int(x) for x in a)] = c
    return HPoly(d, terms)


def verify_asymptotic_orthogonality(
    theta_i: ThetaDirection,
    theta_j: ThetaDirection,
    k_max: int,
    tol: float = 1e-12,
) -> VerificationReport:
    """Brute-force <g_i^k, g_j^k> against C(k+d-1, d-1)^-1 <theta_j, theta_i>^k.

    ``g(z) = <z, theta>``.  The error at each k is normalized by
    ``||g_i^k|| ||g_j^k||``.  The report also carries the mixed pairing
    ``<g_i^k, e_k(theta_j)>`` with the kernel coefficient and the cosine between
    the kernel coefficients of the two lines.
    """
    d = theta_i.dim
    if theta_j.dim != d:
        raise ValueError("dimension mismatch")
    ip = sum(b * a.conjugate() for a, b in zip(theta_i.theta, theta_j.theta))  # <theta_j, theta_i>
    if abs(abs(ip) - d) <= 1e-12:
        raise ValueError("identical lines: the normalized ratio is constantly 1")
    gi, gj = _linear_form(theta_i), _linear_form(theta_j)
    pi, pj = HPoly.constant(d), HPoly.constant(d)
    errors, brute, predicted, ratio_err, mixed_err, kernel_cos = [], [], [], [], [], []
    for k in range(k_max + 1):
        if k:
            pi, pj = multiply(pi, gi), multiply(pj, gj)
        b = hardy_inner(pi, pj)
        binom = Fraction(1, math.comb(k + d - 1, d - 1))
        p = complex(float(binom)) * ip**k
        scale = pi.norm() * pj.norm()
        errors.append(abs(b - p) / scale)
        brute.append(b)
        predicted.append(p)
        ratio_err.append(abs(abs(b) / scale - (abs(ip) / d) ** k))
        ek = kernel_coefficient(theta_j, k)
        mixed_err.append(abs(hardy_inner(pi, ek) - ip**k) / (pi.norm() * ek.norm()))
        ei = kernel_coefficient(theta_i, k)
        kernel_cos.append(abs(hardy_inner(ei, ek)) / (ei.norm() * ek.norm()))
    err = max(errors)
    return VerificationReport(
        claim="asym-orth",
        predicted=predicted,
        computed=brute,
        abs_error=err,
        rel_error=err,
        tolerance=tol,
        status=_status(err <= tol),
        config={"theta_i": list(theta_i.theta), "theta_j": list(theta_j.theta), "k_max": k_max},
        details={
            "normalized_error_by_k": errors,
            "ratio_error_by_k": ratio_err,
            "mixed_pairing_error_max": max(mixed_err),
            "kernel_cosine_by_k": kernel_cos,
            "first_failing_k": next((k for k, e in enumerate(errors) if e > tol), None),
        },
    )


# ---------------------------------------------------------------------------
# non-normality exhibit


def commutator_statistics(ideal: _GradedBase, D: int, i: int = 0) -> dict:
    frame = build_frame(ideal, D)
    S = compress_coordinate(i, frame)
    C = commutator(S, S)
    prof = profile(C)
    norms = prof.block_norms()
    return {
        "frame": frame,
        "block_norms": norms,
        "cumulative_abs": prof.cumulative_abs(),
        "profile": prof,
        "indicator": schatten_1inf_indicator(prof),
    }


def _superlinear_in_log(cum: dict[int, float]) -> bool:
    ks = [k for k in sorted(cum) if k >= 1]
    top = ks[len(ks) // 2 :]
    if len(top) < 4:
        return False
    slopes = [
        (cum[b] - cum[a]) / (math.log(b) - math.log(a)) for a, b in zip(top[:-1], top[1:])
    ]
    trend = np.polyfit(np.arange(len(slopes)), slopes, 1)[0]
    return bool(trend > 0)


def nonnormality_demo(
    ideal: _GradedBase,
    D: int,
    control: _GradedBase | None = None,
    floor: float = 0.1,
) -> VerificationReport:
    """Commutator block norms of [S_1*, S_1] that fail to decay, with an optional control."""
    stats = commutator_statistics(ideal, D)
    frame = stats["frame"]
    config = {"d": ideal.dim, "D": D, "ideal": repr(ideal)}
    if frame.dims()[-1] == 0:
        return VerificationReport("nonnormal-demo", None, None, 0.0, 0.0, floor, "n/a", config,
                                  verdict="not applicable: finite-dimensional quotient")
    norms = stats["block_norms"]
    tail = [norms[k] for k in sorted(norms) if k >= 1]
    min_norm = min(tail)
    superlinear = _superlinear_in_log(stats["cumulative_abs"])
    ok = min_norm >= floor and superlinear
    details = {
        "block_norms": norms,
        "cumulative_abs": stats["cumulative_abs"],
        "min_block_norm": min_norm,
        "superlinear_in_log": superlinear,
        "indicator_max": stats["indicator"][0],
    }
    if control is not None:
        cstats = commutator_statistics(control, D)
        cnorms = cstats["block_norms"]
        details["control_block_norms"] = cnorms
        details["control_within_10_over_k"] = all(v <= 10.0 / k for k, v in cnorms.items() if k >= 1)
        details["ordering_holds"] = all(
            norms[k] > cnorms[k] for k in norms if k >= 1 and k in cnorms
        )
    return VerificationReport(
        claim="nonnormal-demo",
        predicted=f"block norms >= {floor}",
        computed=min_norm,
        abs_error=max(0.0, floor - min_norm),
        rel_error=max(0.0, floor - min_norm) / floor,
        tolerance=floor,
        status=_status(ok),
        config=config,
        verdict="divergence evidence" if ok else "no divergence evidence at this truncation",
        details=details,
    )


# ---------------------------------------------------------------------------
# boundary witness


def boundary_witness(
    components: Sequence[_GradedBase],
    f: HPoly | Sequence[HPoly],
    D: int,
    min_norm: float = 1e-3,
    tail_ratio: float = 0.1,
) -> VerificationReport:
    """Compressed multiplier S_f on the quotient of the intersection of ``components``."""
    ideal = components[0] if len(components) == 1 else IdealIntersection(components)
    frame = build_frame(ideal, D)
    op = compress_general(f, frame)
    norms = {}
    for (m, _), b in sorted(op.blocks.items()):
        if op.trusted[(m, _)]:
            norms[m] = max(norms.get(m, 0.0), float(np.linalg.norm(b, 2)) if b.size else 0.0)
    degrees = sorted(norms)
    total = max(norms.values(), default=0.0)
    config = {"d": ideal.dim, "D": D, "components": len(components), "f": str(f)}
    tail_degrees = degrees[(3 * len(degrees)) // 4 :]
    tail = [norms[k] for k in tail_degrees]
    details = {"block_norms": norms, "last_quartile_degrees": tail_degrees,
               "last_quartile_max": max(tail, default=0.0)}
    if total <= 1e-9:
        return VerificationReport("boundary-witness", f">= {min_norm}", total, min_norm, 1.0,
                                  min_norm, "fail", config, verdict="witness fails: S_f = 0",
                                  details=details)
    decreasing = all(b <= a for a, b in zip(tail[:-1], tail[1:]))
    small = max(tail) <= tail_ratio * total
    ok = total >= min_norm and decreasing and small
    details.update({"tail_decreasing": decreasing, "tail_below_ratio": small,
                    "tail_ratio_observed": max(tail) / total})
    return VerificationReport(
        claim="boundary-witness",
        predicted=f"||S_f|| >= {min_norm}, tail <= {tail_ratio}*||S_f||",
        computed=total,
        abs_error=max(0.0, max(tail) - tail_ratio * total),
        rel_error=max(tail) / total,
        tolerance=tail_ratio,
        status=_status(ok),
        config=config,
        verdict="compact-consistent non-zero witness" if ok else "no witness at this truncation",
        details=details,
    )
