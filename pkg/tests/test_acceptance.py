"""Acceptance criteria, each run at its stated tolerance.

Every test prints one PASS/FAIL line (also collected in the terminal summary)
and then asserts the same verdict.
"""

import cmath
import json
import math
import os
import time

import numpy as np
import pytest

from qml import jpower
from qml import verify as V
from qml.cli import main as cli_main
from qml.compress import build_frame, compress_coordinate
from qml.ideal import GradedIdeal, j_power
from qml.poly import HPoly, ThetaDirection, w_basis
from qml.spectral import essential_spectrum_probe, fit_decay

z1, z2, z3 = (HPoly.coordinate(3, i) for i in range(3))


def test_criterion_01_trace_formula(acceptance):
    rows, ok = [], True
    for d, N, expected in ((3, 1, 1), (3, 2, 3), (4, 2, 4), (3, 3, 6)):
        z = HPoly.coordinate(d, 0)
        t0 = time.perf_counter()
        r = V.verify_trace_formula(d, N, z, z, 40, tol=1e-4)
        elapsed = time.perf_counter() - t0
        case_ok = (
            r.predicted == pytest.approx(expected)
            and r.abs_error <= 1e-4 + r.details["tail_estimate"]
            and elapsed <= 60
        )
        ok &= case_ok
        rows.append(f"(d={d},N={N}) pred {expected} err {r.abs_error:.1e} tail {r.details['tail_estimate']:.1e} {elapsed:.1f}s")
    acceptance(1, "trace formula", ok, "; ".join(rows))
    assert ok


def test_criterion_02_vanishing_trace(acceptance):
    w2 = w_basis(3)[1]
    r = V.verify_trace_formula(3, 2, w2, z1, 40)
    ok = abs(r.computed) <= 1e-6
    acceptance(2, "vanishing trace for f1 in J", ok, f"|trace| = {abs(r.computed):.2e}")
    assert ok


def test_criterion_03_shift_coefficients(acceptance):
    # brute force against the formula as printed: a_{m,n}(k) <z_i^{m-n} g, f>
    k_max = 60
    worst_literal = worst_corrected = worst_mag = 0.0
    bad_literal = set()
    for d in (3, 4):
        for N in (2, 3):
            D = (N - 2) + k_max + 1
            frame = build_frame(j_power(d, N), D)
            bases = V.model_bases(frame, d, N)
            for i in range(d):
                for t, (mat, src, tgt) in enumerate(V.shift_matrix_elements(frame, d, N, i, bases)):
                    for r, (m, jf) in enumerate(tgt):
                        for s, (n, jg) in enumerate(src):
                            k = t - n
                            if m <= n or k > k_max:
                                continue
                            f = jpower.b_basis(d, m)[jf]
                            g = jpower.b_basis(d, n)[jg]
                            lit = V.shift_prediction(d, m, n, i, f, g, k, "literal")
                            e_lit = abs(mat[r, s] - lit)
                            worst_literal = max(worst_literal, e_lit)
                            worst_corrected = max(worst_corrected, abs(mat[r, s] - (-1) ** (m - n) * lit))
                            worst_mag = max(worst_mag, abs(abs(mat[r, s]) - abs(lit)))
                            if e_lit > 1e-8:
                                bad_literal.add((d, m, n))
    ks = range(20, 201)
    out_of_window = []
    for d in (3, 4):
        for m in range(3):
            for n in range(m):
                pa = fit_decay({k: abs(jpower.a_coefficient(d, m, n, k)) for k in ks}, (20, 200)).exponent
                pb = fit_decay({k: abs(jpower.b_coefficient(d, m, n, k)) for k in ks}, (20, 200)).exponent
                if not 0.9 <= pa <= 1.1:
                    out_of_window.append(f"a(d={d},m={m},n={n}) p={pa:.3f}")
                if not 1.8 <= pb <= 2.2:
                    out_of_window.append(f"b(d={d},m={m},n={n}) p={pb:.3f}")
    ok = worst_literal <= 1e-8 and not out_of_window
    detail = (
        f"max err as printed {worst_literal:.2e} (fails for (d,m,n) in {sorted(bad_literal)}), "
        f"with (-1)^(m-n) {worst_corrected:.2e}, magnitudes {worst_mag:.2e}; "
        f"decay outside window: {', '.join(out_of_window) or 'none'}"
    )
    acceptance(3, "shift-coefficient oracle and decay", ok, detail)
    assert ok


def test_criterion_04_zero_blocks(acceptance):
    r = V.verify_zero_blocks(3, 3, None, 25)
    ok = r.passed and r.computed <= 1e-9
    acceptance(4, "vanishing cross blocks", ok, f"max |element| = {r.computed:.2e} over {r.details['pairs_checked']} pairs")
    assert ok


def test_criterion_05_hilbert_function(acceptance):
    bad = []
    for d in range(2, 6):
        for N in range(1, 5):
            target = math.comb(N + d - 2, d - 1)
            dims = [q for _, q in j_power(d, N).hilbert_dims(N + 8)]
            if dims[N - 1 :] != [target] * (len(dims) - N + 1):
                bad.append((d, N, dims))
    ok = not bad
    acceptance(5, "quotient Hilbert function", ok, f"16 (d,N) cases, mismatches: {bad or 'none'}")
    assert ok


def _log_r2_fixed_slope(v):
    ks = np.array(sorted(v), dtype=float)
    y = np.log([v[int(k)] for k in ks])
    x = -np.log(ks + 1)
    c = np.mean(y - x)
    resid = y - (c + x)
    return 1 - (resid**2).sum() / ((y - y.mean()) ** 2).sum(), math.exp(c)


def test_criterion_06_isometry_plus_compact(acceptance):
    D = 40
    rows, ok = [], True
    for d, N in ((3, 1), (3, 2), (3, 3), (4, 2)):
        frame = build_frame(j_power(d, N), D)
        S = jpower.model_shift(frame, d, N)
        for i in range(d):
            diff = S - compress_coordinate(i, frame)
            v = {m: val for (m, _), val in diff.block_norms().items() if 5 <= m <= D - 2}
            c = max(val * (k + 1) for k, val in v.items())
            bound_ok = all(val <= c / (k + 1) * (1 + 1e-12) for k, val in v.items())
            r2, _ = _log_r2_fixed_slope(v)
            ok &= bound_ok and r2 >= 0.95
            if i == 0:
                rows.append(f"(d={d},N={N}) c={c:.3f} R2={r2:.3f}")
    acceptance(6, "isometry plus (k+1)^-1 defect", ok, "; ".join(rows))
    assert ok


def test_criterion_07_module_map(acceptance):
    r = V.verify_rg_module_map(3, 2, None, 50, seed=0)
    acceptance(7, "module-map identity", r.passed, f"max coefficient error {r.abs_error:.2e}")
    assert r.passed


def test_criterion_08_asymptotic_orthogonality(acceptance):
    om = cmath.exp(2j * math.pi / 3)
    pairs = [
        ((1, 1, 1), (1, 1, -1)),
        ((1, 1, 1), (1, om, om**2)),  # orthogonal
        ((1, 1), (1, -1)),  # orthogonal
    ]
    rows, ok = [], True
    for ti, tj in pairs:
        r = V.verify_asymptotic_orthogonality(ThetaDirection(ti), ThetaDirection(tj), 40)
        ok &= r.passed
        rows.append(
            f"{len(ti)}d pair: max normalized err {r.abs_error:.2e} (first failing k = {r.details['first_failing_k']}); "
            f"kernel-pairing identity err {r.details['mixed_pairing_error_max']:.1e}"
        )
    acceptance(8, "asymptotic orthogonality closed form", ok, "; ".join(rows))
    assert ok


def test_criterion_09_nonnormality_contrast(acceptance):
    r = V.nonnormality_demo(GradedIdeal(3, [z1 - z2]), 25, control=j_power(3, 1))
    min_norm = r.details["min_block_norm"]
    control = r.details["control_block_norms"]
    ok = (
        min_norm >= 0.1
        and r.details["control_within_10_over_k"]
        and r.details["ordering_holds"]
        and r.passed
    )
    acceptance(
        9, "non-normality contrast", ok,
        f"min block norm {min_norm:.3f}; control at k=24: {control[24]:.2e} <= {10 / 24:.2e}; verdict '{r.verdict}'",
    )
    assert ok


def test_criterion_10_boundary_witness(acceptance):
    w2 = w_basis(3)[1]
    r = V.boundary_witness([j_power(3, 2)], w2, 30)
    ok = r.verdict == "compact-consistent non-zero witness"
    acceptance(
        10, "boundary witness", ok,
        f"||S_f|| = {r.computed:.4f}; last-quartile max {r.details['last_quartile_max']:.4f} "
        f"vs 0.1*||S_f|| = {0.1 * r.computed:.4f}; verdict '{r.verdict}'",
    )
    assert ok


def test_criterion_11_essential_spectrum_probe(acceptance):
    d, D = 3, 30
    frame = build_frame(j_power(d, 2), D)
    starts = list(range(5, D - 1))
    ok = True
    rows = []
    for t in (1.0, cmath.exp(0.7j)):
        vals = [essential_spectrum_probe((t, t, t), frame, s) for s in starts]
        mono = all(b <= a for a, b in zip(vals[:-1], vals[1:]))
        at20 = vals[starts.index(20)]
        ok &= mono and at20 <= 0.05
        rows.append(f"t={t:.2f}: probe(5)={vals[0]:.3f}, probe(20)={at20:.3f}, decreasing={mono}")
    zero = essential_spectrum_probe((0, 0, 0), frame, 20)
    ok &= zero >= d - 0.2
    rows.append(f"lambda=0: probe(20)={zero:.3f} vs {d - 0.2}")
    acceptance(11, "essential-spectrum probe", ok, "; ".join(rows))
    assert ok


def test_criterion_12_cli_contract(acceptance, tmp_path, monkeypatch):
    spec = tmp_path / "j2.json"
    one = {"re": 1, "im": 0}
    spec.write_text(json.dumps({"d": 3, "components": [], "presets": {"kind": "j_theta_power", "theta": [one] * 3, "power": 2}}))
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"D": 14, "seed": 3, "experiments": [
        "dims", "zero-blocks", {"name": "module-map", "samples": 10}, {"name": "commutator", "i": 0, "j": 0},
        {"name": "trace-formula", "f1": "z1", "f2": "z1"}]}))
    reports = []
    for threads, name in (("1", "a"), ("2", "b")):
        monkeypatch.setenv("QML_THREADS", threads)
        status = cli_main(["suite", "--spec", str(spec), "--config", str(cfg), "--out", str(tmp_path / name)])
        reports.append((status, (tmp_path / name / "report.json").read_text()))
    strip = lambda text: [ln for ln in text.splitlines() if '"timestamp"' not in ln]
    deterministic = reports[0][1] != "" and strip(reports[0][1]) == strip(reports[1][1])
    profiles_equal = all(
        (tmp_path / "a" / "profiles" / p).read_bytes() == (tmp_path / "b" / "profiles" / p).read_bytes()
        for p in os.listdir(tmp_path / "a" / "profiles")
    )
    fail_status = cli_main(["zero-blocks", "--spec", str(spec), "-D", "6", "--tol", "zero-blocks=1e-40",
                            "--out", str(tmp_path / "c")])
    bad_out = tmp_path / "d"
    input_status = cli_main(["suite", "--spec", str(spec), "--config", str(tmp_path / "missing.json"), "--out", str(bad_out)])
    statuses = (reports[0][0], fail_status, input_status)
    ok = deterministic and profiles_equal and statuses == (0, 1, 2) and not bad_out.exists()
    acceptance(12, "CLI determinism and exit statuses", ok,
               f"byte-identical modulo timestamp: {deterministic and profiles_equal}; statuses {statuses}")
    assert ok
